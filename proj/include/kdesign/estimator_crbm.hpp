#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdesign/basis_rotation.hpp"
#include "kdesign/constrained_space.hpp"
#include "kdesign/estimator_mle.hpp"
#include "kdesign/measurement.hpp"
#include "kdesign/projected_ensemble.hpp"
#include "kdesign/rng.hpp"

namespace kdesign {

/// The group has no Z-basis record for A, which the cRBM training scheme
/// requires.
struct training_unsupported : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Weights and biases of one restricted Boltzmann machine (all real).
struct RbmParams {
    Eigen::VectorXd b;  // visible biases, length V
    Eigen::VectorXd c;  // hidden biases, length H
    Eigen::MatrixXd w;  // V x H coupling weights

    int visible() const { return static_cast<int>(b.size()); }
    int hidden() const { return static_cast<int>(c.size()); }
    int param_count() const { return visible() + hidden() + visible() * hidden(); }

    static RbmParams zeros(int v, int h) {
        return {Eigen::VectorXd::Zero(v), Eigen::VectorXd::Zero(h),
                Eigen::MatrixXd::Zero(v, h)};
    }
};

/// Wavefunction parametrized by two RBMs sharing the visible layer: theta
/// carries the amplitudes, mu the phases.
struct ComplexRbm {
    RbmParams amplitude;  // theta
    RbmParams phase;      // mu
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 500;
    int batch_size = 32;
    int cd_steps = 10;
    int hidden = 3;
    double init_sigma = 0.01;
    bool exact_negative_phase = false;  // enumerate the model average instead of CD
    std::uint64_t seed = 0;
};

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

namespace detail {
inline double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

inline int visible_bit(std::uint32_t z, int v, int i) { return (z >> (v - 1 - i)) & 1; }
}  // namespace detail

/// Effective (marginal) energy of a visible configuration:
/// E(z) = -b.z - sum_j ln(1 + exp(c_j + sum_i W_ij z_i)).
inline double effective_energy(const RbmParams& p, SiteConfig z) {
    if (z.n != p.visible()) throw std::invalid_argument("effective_energy: length mismatch");
    double e = 0;
    for (int i = 0; i < p.visible(); ++i) e -= p.b[i] * z.bit(i);
    for (int j = 0; j < p.hidden(); ++j) {
        double a = p.c[j];
        for (int i = 0; i < p.visible(); ++i) a += p.w(i, j) * z.bit(i);
        e -= detail::softplus(a);
    }
    return e;
}

/// Joint energy E(z, h) = -b.z - c.h - z.W.h of a full network configuration.
inline double joint_energy(const RbmParams& p, SiteConfig z, SiteConfig h) {
    if (z.n != p.visible() || h.n != p.hidden())
        throw std::invalid_argument("joint_energy: length mismatch");
    double e = 0;
    for (int i = 0; i < p.visible(); ++i) e -= p.b[i] * z.bit(i);
    for (int j = 0; j < p.hidden(); ++j) e -= p.c[j] * h.bit(j);
    for (int i = 0; i < p.visible(); ++i)
        for (int j = 0; j < p.hidden(); ++j) e -= p.w(i, j) * z.bit(i) * h.bit(j);
    return e;
}

/// Z = sum_{z,h} exp(-E(z,h)) by exhaustive enumeration.
inline double partition_function(const RbmParams& p) {
    const int v = p.visible(), h = p.hidden();
    if (v + h > 20)
        throw std::runtime_error("partition_function: V + H > 20, enumeration unsupported");
    double z_sum = 0;
    for (std::uint32_t z = 0; z < (1u << v); ++z)
        for (std::uint32_t hh = 0; hh < (1u << h); ++hh)
            z_sum += std::exp(-joint_energy(p, SiteConfig{z, v}, SiteConfig{hh, h}));
    return z_sum;
}

/// psi(z) = Z_theta^{-1/2} exp(-(E_theta(z) + i E_mu(z)) / 2).
inline std::complex<double> psi_crbm(const ComplexRbm& m, SiteConfig z) {
    const double zt = partition_function(m.amplitude);
    return std::exp(std::complex<double>(-effective_energy(m.amplitude, z) / 2.0,
                                         -effective_energy(m.phase, z) / 2.0)) /
           std::sqrt(zt);
}

/// Unnormalized amplitude; enough wherever only ratios matter.
inline std::complex<double> psi_crbm_unnormalized(const ComplexRbm& m, SiteConfig z) {
    return std::exp(std::complex<double>(-effective_energy(m.amplitude, z) / 2.0,
                                         -effective_energy(m.phase, z) / 2.0));
}

/// Gradient of the effective energy, flattened as [b | c | W row-major]:
/// dE/db_i = -z_i, dE/dc_j = -sigma(a_j), dE/dW_ij = -z_i sigma(a_j).
inline Eigen::VectorXd grad_effective_energy(const RbmParams& p, SiteConfig z) {
    const int v = p.visible(), h = p.hidden();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.param_count());
    for (int i = 0; i < v; ++i) g[i] = -z.bit(i);
    for (int j = 0; j < h; ++j) {
        double a = p.c[j];
        for (int i = 0; i < v; ++i) a += p.w(i, j) * z.bit(i);
        const double s = sigmoid(a);
        g[v + j] = -s;
        for (int i = 0; i < v; ++i)
            if (z.bit(i)) g[v + h + i * h + j] = -s;
    }
    return g;
}

/// Model average <grad E_theta>_{p_theta} by exact enumeration of the
/// visible layer.
inline Eigen::VectorXd rbm_negative_phase_exact(const RbmParams& p) {
    const int v = p.visible();
    if (v > 20) throw std::runtime_error("rbm_negative_phase_exact: V > 20 unsupported");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.param_count());
    double norm = 0;
    double e_min = std::numeric_limits<double>::infinity();
    std::vector<double> energies(1u << v);
    for (std::uint32_t z = 0; z < (1u << v); ++z) {
        energies[z] = effective_energy(p, SiteConfig{z, v});
        e_min = std::min(e_min, energies[z]);
    }
    for (std::uint32_t z = 0; z < (1u << v); ++z) {
        const double wgt = std::exp(-(energies[z] - e_min));
        g += wgt * grad_effective_energy(p, SiteConfig{z, v});
        norm += wgt;
    }
    return g / norm;
}

/// Model average estimated with contrastive divergence: k alternating Gibbs
/// sweeps on the given chains (visible configurations, updated in place),
/// then the gradient averaged over the final chain states.
inline Eigen::VectorXd rbm_negative_phase_cd(const RbmParams& p,
                                             std::vector<std::uint32_t>& chains, int k,
                                             std::mt19937_64& rng) {
    const int v = p.visible(), h = p.hidden();
    if (chains.empty()) throw std::invalid_argument("rbm_negative_phase_cd: no chains");
    std::vector<int> hidden(static_cast<std::size_t>(h));
    for (auto& z : chains) {
        for (int step = 0; step < k; ++step) {
            for (int j = 0; j < h; ++j) {
                double a = p.c[j];
                for (int i = 0; i < v; ++i) a += p.w(i, j) * detail::visible_bit(z, v, i);
                hidden[static_cast<std::size_t>(j)] = uniform_unit(rng) < sigmoid(a);
            }
            std::uint32_t znew = 0;
            for (int i = 0; i < v; ++i) {
                double a = p.b[i];
                for (int j = 0; j < h; ++j)
                    a += p.w(i, j) * hidden[static_cast<std::size_t>(j)];
                znew = (znew << 1) | static_cast<std::uint32_t>(uniform_unit(rng) < sigmoid(a));
            }
            z = znew;
        }
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.param_count());
    for (std::uint32_t z : chains) g += grad_effective_energy(p, SiteConfig{z, v});
    return g / static_cast<double>(chains.size());
}

/// Data term of the gradient for a batch of possibly rotated records,
/// averaged over the batch. For an all-Z record the theta part is the plain
/// grad E_theta(z) and the mu part vanishes; X/Y records contribute through
/// the basis-rotated amplitude ratios
///   S(r) = sum_v <r|v> grad E(v) psi(v) / sum_v <r|v> psi(v),
/// giving Re S for theta and -Im S for mu.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> rbm_positive_phase(
    const ComplexRbm& m, const std::vector<AShot>& batch) {
    const int v = m.amplitude.visible();
    const int np_t = m.amplitude.param_count();
    const int np_m = m.phase.param_count();
    Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(np_t);
    Eigen::VectorXd g_mu = Eigen::VectorXd::Zero(np_m);
    Eigen::VectorXcd s_theta(np_t), s_mu(np_m);
    for (const auto& shot : batch) {
        if (shot.bases.find_first_not_of('Z') == std::string::npos) {
            g_theta += grad_effective_energy(m.amplitude, shot.bits);
            continue;
        }
        const Eigen::VectorXcd w = outcome_projector_vector(shot.bases, shot.bits);
        std::complex<double> a_sum = 0;
        s_theta.setZero();
        s_mu.setZero();
        for (std::uint32_t z = 0; z < (1u << v); ++z) {
            const std::complex<double> u = std::conj(w[static_cast<Eigen::Index>(z)]);
            if (u == std::complex<double>(0, 0)) continue;
            const SiteConfig zc{z, v};
            const std::complex<double> psi = psi_crbm_unnormalized(m, zc);
            a_sum += u * psi;
            s_theta += u * psi * grad_effective_energy(m.amplitude, zc);
            s_mu += u * psi * grad_effective_energy(m.phase, zc);
        }
        g_theta += (s_theta / a_sum).real();
        g_mu -= (s_mu / a_sum).imag();
    }
    const double n = static_cast<double>(batch.size());
    return {g_theta / n, g_mu / n};
}

/// Mean negative log-likelihood of the records under the cRBM (exact
/// partition function; small networks only). The finite-difference oracle for
/// the training gradient differentiates this.
inline double crbm_nll(const ComplexRbm& m, const std::vector<AShot>& records,
                       double floor = 1e-300) {
    const int v = m.amplitude.visible();
    const double z_theta = partition_function(m.amplitude);
    double nll = 0;
    for (const auto& shot : records) {
        const Eigen::VectorXcd w = outcome_projector_vector(shot.bases, shot.bits);
        std::complex<double> a_sum = 0;
        for (std::uint32_t z = 0; z < (1u << v); ++z)
            a_sum += std::conj(w[static_cast<Eigen::Index>(z)]) *
                     psi_crbm_unnormalized(m, SiteConfig{z, v});
        nll -= std::log(std::max(std::norm(a_sum) / z_theta, floor));
    }
    return nll / static_cast<double>(records.size());
}

/// Train a cRBM on one z_B group by stochastic gradient descent on the
/// negative log-likelihood: positive phase from the (rotated) data, negative
/// phase from CD-k chains seeded with batch outcomes, or from exact
/// enumeration when cfg.exact_negative_phase is set. Requires at least one
/// all-Z record. Deterministic given cfg.seed.
inline ComplexRbm train(const std::vector<AShot>& records, const TrainConfig& cfg) {
    if (records.empty()) throw std::invalid_argument("train: empty dataset");
    const int v = static_cast<int>(records.front().bases.size());
    const bool has_z = std::any_of(records.begin(), records.end(), [](const AShot& s) {
        return s.bases.find_first_not_of('Z') == std::string::npos;
    });
    if (!has_z)
        throw training_unsupported("train: group has no all-Z record for subsystem A");

    std::mt19937_64 rng = derive_stream(cfg.seed, {0x637262});
    std::normal_distribution<double> gauss(0.0, cfg.init_sigma);
    ComplexRbm m{RbmParams::zeros(v, cfg.hidden), RbmParams::zeros(v, cfg.hidden)};
    for (RbmParams* p : {&m.amplitude, &m.phase}) {
        for (int i = 0; i < v; ++i) p->b[i] = gauss(rng);
        for (int j = 0; j < cfg.hidden; ++j) p->c[j] = gauss(rng);
        for (int i = 0; i < v; ++i)
            for (int j = 0; j < cfg.hidden; ++j) p->w(i, j) = gauss(rng);
    }

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<AShot> batch;
    std::vector<std::uint32_t> chains;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(records[order[i]]);

            auto [g_theta, g_mu] = rbm_positive_phase(m, batch);
            if (cfg.exact_negative_phase) {
                g_theta -= rbm_negative_phase_exact(m.amplitude);
            } else {
                chains.clear();
                for (const auto& shot : batch) chains.push_back(shot.bits.bits);
                g_theta -= rbm_negative_phase_cd(m.amplitude, chains, cfg.cd_steps, rng);
            }
            m.amplitude.b -= cfg.learning_rate * g_theta.head(v);
            m.amplitude.c -= cfg.learning_rate * g_theta.segment(v, cfg.hidden);
            for (int i = 0; i < v; ++i)
                m.amplitude.w.row(i) -=
                    cfg.learning_rate *
                    g_theta.segment(v + cfg.hidden + i * cfg.hidden, cfg.hidden).transpose();
            m.phase.b -= cfg.learning_rate * g_mu.head(v);
            m.phase.c -= cfg.learning_rate * g_mu.segment(v, cfg.hidden);
            for (int i = 0; i < v; ++i)
                m.phase.w.row(i) -=
                    cfg.learning_rate *
                    g_mu.segment(v + cfg.hidden + i * cfg.hidden, cfg.hidden).transpose();
        }
    }
    return m;
}

/// Evaluate a trained cRBM on every visible configuration and normalize.
inline Eigen::VectorXcd crbm_state_vector(const ComplexRbm& m) {
    const int v = m.amplitude.visible();
    Eigen::VectorXcd psi(1 << v);
    for (std::uint32_t z = 0; z < (1u << v); ++z)
        psi[static_cast<Eigen::Index>(z)] = psi_crbm_unnormalized(m, SiteConfig{z, v});
    psi.normalize();
    return psi;
}

/// Ensemble estimation with one cRBM per bath outcome. Groups without an
/// all-Z record cannot be trained; they are skipped with a warning and the
/// remaining probabilities are renormalized. Per-group seeds derive from
/// cfg.seed and z_B.
inline Ensemble crbm_estimate_ensemble(const GroupedDataset& g, const TrainConfig& cfg) {
    const SubsystemSpace sub(g.n_a);
    Ensemble e;
    e.n_a = g.n_a;
    e.dim_a = sub.dim_constrained();
    double kept_mass = 0;
    for (const auto& [key, shots] : g.groups) {
        const SiteConfig z_b = g.z_b_config(key);
        TrainConfig group_cfg = cfg;
        group_cfg.seed = derive_stream(cfg.seed, {key})();
        ComplexRbm model;
        try {
            model = train(shots, group_cfg);
        } catch (const training_unsupported&) {
            std::cerr << "[kdesign] warning: skipping z_B=" << z_b.to_string()
                      << " (no Z-basis record; p=" << g.empirical_p.at(key) << ")\n";
            continue;
        }
        const Eigen::VectorXcd full = crbm_state_vector(model);
        const double p = g.empirical_p.at(key);
        kept_mass += p;
        e.entries.push_back(
            {z_b, p, detail::constrain_fitted_state(full, sub, z_b.to_string())});
    }
    if (e.entries.empty()) {
        std::cerr << "[kdesign] warning: no trainable group; returning empty ensemble\n";
        return e;
    }
    if (kept_mass < 1.0 - 1e-12)
        for (auto& entry : e.entries) entry.prob /= kept_mass;
    return e;
}

}  // namespace kdesign
