#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdesign/basis_rotation.hpp"
#include "kdesign/constrained_space.hpp"
#include "kdesign/dynamics.hpp"
#include "kdesign/moment_operator.hpp"

namespace kdesign {

/// Probability of a bath outcome fell below the inclusion threshold.
struct zero_probability_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Bath outcomes with p(z_B) below this are numerical noise, not ensemble
// members (double-precision floor after unitary evolution).
inline constexpr double kEnsembleProbabilityThreshold = 1e-14;

/// Projected ensemble: the conditional subsystem states |Psi_A(z_B)>, each
/// weighted by the probability p(z_B) of its bath outcome. States live in the
/// blockade-constrained subsystem space of dimension dim_a.
struct Ensemble {
    struct Entry {
        SiteConfig z_b;
        double prob = 0;
        Eigen::VectorXcd state;
    };

    int n_a = 0;
    int dim_a = 0;
    std::vector<Entry> entries;

    double total_probability() const {
        double s = 0;
        for (const auto& e : entries) s += e.prob;
        return s;
    }
};

namespace detail {

/// Gather the amplitudes Psi(z_A, z_B) over the constrained A-basis for a
/// fixed bath outcome. Returns the outcome probability; `out` is unnormalized.
inline double gather_conditional(const ConstrainedSpace& space, const Eigen::VectorXcd& psi,
                                 const SubsystemSpace& sub, SiteConfig z_b,
                                 Eigen::VectorXcd& out) {
    out = Eigen::VectorXcd::Zero(sub.dim_constrained());
    double p = 0;
    for (int i = 0; i < sub.dim_constrained(); ++i) {
        const SiteConfig a = sub.basis[static_cast<std::size_t>(i)];
        if (!boundary_compatible(a, z_b)) continue;
        const int gi = space.index_of(join_configs(a, z_b));
        if (gi < 0) continue;
        out[i] = psi[gi];
        p += std::norm(psi[gi]);
    }
    return p;
}

}  // namespace detail

/// |Psi_A(z_B)> = (1_A (x) <z_B|) |Psi> / sqrt(p(z_B)) on the constrained
/// A-basis, plus the outcome probability p(z_B). Phases are carried over from
/// the global amplitudes unchanged.
inline std::pair<StateVector, double> conditional_state(const ConstrainedSpace& space,
                                                        const StateVector& psi, SiteConfig z_b) {
    if (!z_b.blockade_ok())
        throw std::invalid_argument("conditional_state: bath outcome violates blockade");
    const int n_a = space.n_sites - z_b.n;
    if (n_a < 1) throw std::invalid_argument("conditional_state: bath outcome too long");
    const SubsystemSpace sub(n_a);
    StateVector cond;
    cond.tag = BasisTag::subsystem_constrained;
    const double p = detail::gather_conditional(space, psi.amplitudes, sub, z_b, cond.amplitudes);
    if (p < kEnsembleProbabilityThreshold)
        throw zero_probability_error("conditional_state: outcome " + z_b.to_string() +
                                     " has vanishing probability");
    cond.amplitudes /= std::sqrt(p);
    return {cond, p};
}

/// The full projected ensemble of |Psi> for a bipartition at n_a sites: one
/// entry per bath outcome with nonvanishing probability. n_a equal to the
/// chain length gives the degenerate single-entry ensemble (empty bath).
inline Ensemble exact_ensemble(const ConstrainedSpace& space, const StateVector& psi, int n_a) {
    if (n_a < 1 || n_a > space.n_sites)
        throw std::invalid_argument("exact_ensemble: invalid subsystem size");
    const SubsystemSpace sub(n_a);
    Ensemble e;
    e.n_a = n_a;
    e.dim_a = sub.dim_constrained();
    if (n_a == space.n_sites) {
        e.entries.push_back({SiteConfig{0, 0}, 1.0, psi.amplitudes});
        return e;
    }
    Eigen::VectorXcd amps;
    for (const SiteConfig& z_b : enumerate_constrained_basis(space.n_sites - n_a)) {
        const double p = detail::gather_conditional(space, psi.amplitudes, sub, z_b, amps);
        if (p < kEnsembleProbabilityThreshold) continue;
        e.entries.push_back({z_b, p, amps / std::sqrt(p)});
    }
    return e;
}

/// rho^{(k)} = sum_z p(z) (|psi_z><psi_z|)^{tensor k}.
inline MomentOperator ensemble_moment(const Ensemble& e, int k) {
    if (k < 1) throw std::invalid_argument("ensemble_moment: k must be >= 1");
    if (k > 4)
        std::cerr << "[kdesign] warning: ensemble_moment k=" << k << " needs dim_a^"
                  << 2 * k << " doubles\n";
    Eigen::Index dim = 1;
    for (int i = 0; i < k; ++i) dim *= e.dim_a;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& entry : e.entries) {
        const Eigen::VectorXcd t = kron_power(entry.state, k);
        m.noalias() += entry.prob * t * t.adjoint();
    }
    return MomentOperator{k, std::move(m)};
}

/// A labelled subsystem measurement outcome: per-qubit bases plus outcome bits.
struct ALabeledOutcome {
    std::string bases;
    SiteConfig bits;
};

/// p(r_A) = sum_z p(z) |<r_A|psi_z>|^2 for a product outcome r_A in the given
/// per-qubit bases.
inline double marginal_probability(const Ensemble& e, const ALabeledOutcome& r_a) {
    if (static_cast<int>(r_a.bases.size()) != e.n_a || r_a.bits.n != e.n_a)
        throw std::invalid_argument("marginal_probability: outcome length mismatch");
    const SubsystemSpace sub(e.n_a);
    const Eigen::VectorXcd w = outcome_projector_vector(r_a.bases, r_a.bits);
    double p = 0;
    for (const auto& entry : e.entries) {
        const Eigen::VectorXcd full = embed_in_full_basis(entry.state, sub);
        p += entry.prob * std::norm(w.dot(full));  // Eigen dot conjugates the left factor
    }
    return p;
}

/// sum_z p(z_B) p(z_A = 0...0 | z_B)^k at each time point. Rescaled by
/// D_A (D_A + 1) ... (D_A + k - 1), the late-time value approaches k! when
/// the ensemble approaches the Haar distribution.
inline std::vector<double> conditional_moment_series(const ConstrainedSpace& space,
                                                     const Propagator& prop,
                                                     const StateVector& psi0,
                                                     const std::vector<double>& times, int n_a,
                                                     int k) {
    if (k < 1) throw std::invalid_argument("conditional_moment_series: k must be >= 1");
    std::vector<double> series;
    series.reserve(times.size());
    for (double t : times) {
        const StateVector psi = evolve(prop, psi0, t);
        const Ensemble e = exact_ensemble(space, psi, n_a);
        double s = 0;
        for (const auto& entry : e.entries)
            s += entry.prob * std::pow(std::norm(entry.state[0]), k);
        series.push_back(s);
    }
    return series;
}

/// Text serialization of an ensemble: one entry per line with the bath
/// outcome, its probability and the constrained-basis amplitudes.
inline void write_ensemble(std::ostream& os, const Ensemble& e) {
    os << "# kdesign-ensemble na=" << e.n_a << " dim=" << e.dim_a
       << " entries=" << e.entries.size() << "\n";
    os.precision(17);
    for (const auto& entry : e.entries) {
        os << (entry.z_b.n > 0 ? entry.z_b.to_string() : "-") << ' ' << entry.prob;
        for (Eigen::Index i = 0; i < entry.state.size(); ++i)
            os << ' ' << entry.state[i].real() << ' ' << entry.state[i].imag();
        os << '\n';
    }
}

inline Ensemble read_ensemble(std::istream& is) {
    std::string header;
    std::getline(is, header);
    Ensemble e;
    if (std::sscanf(header.c_str(), "# kdesign-ensemble na=%d dim=%d", &e.n_a, &e.dim_a) != 2)
        throw std::runtime_error("read_ensemble: bad header");
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string zb;
        Ensemble::Entry entry;
        ss >> zb >> entry.prob;
        entry.z_b = (zb == "-") ? SiteConfig{0, 0} : SiteConfig::from_string(zb);
        entry.state.resize(e.dim_a);
        for (int i = 0; i < e.dim_a; ++i) {
            double re, im;
            ss >> re >> im;
            entry.state[i] = {re, im};
        }
        if (!ss) throw std::runtime_error("read_ensemble: bad entry line");
        e.entries.push_back(std::move(entry));
    }
    return e;
}

}  // namespace kdesign
