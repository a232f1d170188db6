#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdesign/basis_rotation.hpp"
#include "kdesign/constrained_space.hpp"
#include "kdesign/measurement.hpp"
#include "kdesign/projected_ensemble.hpp"
#include "kdesign/rng.hpp"

namespace kdesign {

/// Wavefunction ansatz with the 2^{n_a} computational-basis coefficients as
/// free parameters. After fitting the vector is unit norm and gauge fixed:
/// the first coefficient with modulus above 1e-9 is real and non-negative.
struct CoefficientAnsatz {
    Eigen::VectorXcd alpha;

    void gauge_fix() {
        for (Eigen::Index i = 0; i < alpha.size(); ++i) {
            const double m = std::abs(alpha[i]);
            if (m > 1e-9) {
                alpha *= std::conj(alpha[i]) / m;
                return;
            }
        }
    }
};

struct FitReport {
    double final_cost = 0;
    int iterations = 0;
    bool converged = false;
    std::size_t record_count = 0;
};

struct MleOptions {
    int max_iterations = 2000;
    double tolerance = 1e-12;    // stop when an accepted step changes the cost less than this
    double floor = 1e-12;        // probability clamp inside the log
    double init_step = 0.25;
    double perturbation = 0.01;  // scale of the random complex offset on the uniform init
    std::uint64_t seed = 0;
};

enum class EstimatorMethod { frequentist, maxlk };

namespace detail {

/// Deduplicated measurement records: projector vector in the computational
/// basis plus occurrence count.
struct WeightedOutcome {
    Eigen::VectorXcd w;
    double count = 0;
};

inline std::vector<WeightedOutcome> dedupe_records(const std::vector<AShot>& records) {
    std::map<std::pair<std::string, std::uint32_t>, double> counts;
    for (const auto& r : records) counts[{r.bases, r.bits.bits}] += 1.0;
    std::vector<WeightedOutcome> out;
    out.reserve(counts.size());
    for (const auto& [key, c] : counts) {
        const int n_a = static_cast<int>(key.first.size());
        out.push_back({outcome_projector_vector(key.first, SiteConfig{key.second, n_a}), c});
    }
    return out;
}

inline double cost_of(const Eigen::VectorXcd& alpha, const std::vector<WeightedOutcome>& data,
                      double total, double floor) {
    double c = 0;
    for (const auto& d : data)
        c -= d.count * std::log(std::max(std::norm(alpha.dot(d.w)), floor));
    return c / total;
}

/// Gradient of the cost with respect to (Re alpha, Im alpha), packed as a
/// complex vector: G = -(2/N) sum_i conj(g_i) w_i / |g_i|^2 with g_i the
/// overlap <psi(alpha)|r_i>. Records inside the clamp are flat and skipped.
inline Eigen::VectorXcd gradient_of(const Eigen::VectorXcd& alpha,
                                    const std::vector<WeightedOutcome>& data, double total,
                                    double floor) {
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(alpha.size());
    for (const auto& d : data) {
        const std::complex<double> overlap = alpha.dot(d.w);  // conjugates alpha
        const double p = std::norm(overlap);
        if (p < floor) continue;
        g.noalias() -= (2.0 * d.count / (total * p)) * std::conj(overlap) * d.w;
    }
    return g;
}

}  // namespace detail

/// Negative mean log-likelihood of the records under the ansatz, with the
/// per-record probability clamped at `floor` before the log.
inline double likelihood_cost(const CoefficientAnsatz& ansatz, const std::vector<AShot>& records,
                              double floor = 1e-12) {
    if (records.empty()) throw std::invalid_argument("likelihood_cost: empty dataset");
    const auto data = detail::dedupe_records(records);
    return detail::cost_of(ansatz.alpha, data, static_cast<double>(records.size()), floor);
}

/// Likelihood fit with an explicit starting point. Projected gradient descent
/// on the 2 * 2^{n_a} real parameters, renormalizing after every step; the
/// step halves whenever a trial increases the cost and grows slowly on
/// success. Stops once an accepted step improves the cost by less than
/// opts.tolerance.
inline std::pair<CoefficientAnsatz, FitReport> maxlk_estimate_from(
    Eigen::VectorXcd alpha, const std::vector<AShot>& records, const MleOptions& opts = {}) {
    if (records.empty()) throw std::invalid_argument("maxlk_estimate: empty dataset");
    const auto data = detail::dedupe_records(records);
    const double total = static_cast<double>(records.size());

    alpha.normalize();
    double cost = detail::cost_of(alpha, data, total, opts.floor);
    double step = opts.init_step;
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        const Eigen::VectorXcd grad = detail::gradient_of(alpha, data, total, opts.floor);
        bool accepted = false;
        while (step > 1e-14) {
            Eigen::VectorXcd trial = alpha - step * grad;
            trial.normalize();
            const double trial_cost = detail::cost_of(trial, data, total, opts.floor);
            if (trial_cost <= cost) {
                const double gain = cost - trial_cost;
                alpha = std::move(trial);
                cost = trial_cost;
                step *= 1.1;
                accepted = true;
                if (gain < opts.tolerance) converged = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) converged = true;  // no descent direction left at any step size
        if (converged) {
            ++iter;
            break;
        }
    }

    CoefficientAnsatz ansatz{std::move(alpha)};
    ansatz.gauge_fix();
    return {std::move(ansatz),
            FitReport{cost, iter, converged, static_cast<std::size_t>(total)}};
}

/// Maximum-likelihood estimate of the subsystem state from one z_B group.
/// Initialization is uniform amplitudes with a small seeded complex
/// perturbation; the result is deterministic given opts.seed.
inline std::pair<CoefficientAnsatz, FitReport> maxlk_estimate(const std::vector<AShot>& records,
                                                              const MleOptions& opts = {}) {
    if (records.empty()) throw std::invalid_argument("maxlk_estimate: empty dataset");
    const int n_a = static_cast<int>(records.front().bases.size());
    const Eigen::Index dim = 1 << n_a;
    std::mt19937_64 rng = derive_stream(opts.seed, {0x6d6c65});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd alpha(dim);
    const double base = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Eigen::Index i = 0; i < dim; ++i)
        alpha[i] = base + opts.perturbation * std::complex<double>(gauss(rng), gauss(rng));
    return maxlk_estimate_from(std::move(alpha), records, opts);
}

/// Frequentist ansatz: alpha_{z_A} = sqrt(count(z_A) / N), real and
/// non-negative. Only defined for Z-basis records; anything else signals a
/// protocol mismatch.
inline CoefficientAnsatz frequentist_estimate(const std::vector<AShot>& records) {
    if (records.empty()) throw std::invalid_argument("frequentist_estimate: empty group");
    const int n_a = static_cast<int>(records.front().bases.size());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(1 << n_a);
    for (const auto& r : records) {
        if (r.bases.find_first_not_of('Z') != std::string::npos)
            throw std::invalid_argument(
                "frequentist_estimate: non-Z record; use the maxlk estimator for random bases");
        counts[r.bits.bits] += 1.0;
    }
    CoefficientAnsatz ansatz;
    ansatz.alpha = (counts / static_cast<double>(records.size())).cwiseSqrt();
    return ansatz;
}

inline CoefficientAnsatz frequentist_estimate(const GroupedDataset& g, SiteConfig z_b) {
    const auto it = g.groups.find(z_b.bits);
    if (it == g.groups.end() || it->second.empty())
        throw std::invalid_argument("frequentist_estimate: no records for outcome " +
                                    z_b.to_string());
    return frequentist_estimate(it->second);
}

namespace detail {

/// Truncate a fitted full-basis state to the constrained subsystem space and
/// renormalize. Falls back to a uniform state if nothing survives.
inline Eigen::VectorXcd constrain_fitted_state(const Eigen::VectorXcd& alpha,
                                               const SubsystemSpace& sub,
                                               const std::string& label) {
    Eigen::VectorXcd state;
    const double kept = project_to_constrained(alpha, sub, state);
    if (kept < 1e-15) {
        std::cerr << "[kdesign] warning: fitted state for " << label
                  << " has no weight on the constrained space; using the uniform state\n";
        state = Eigen::VectorXcd::Constant(sub.dim_constrained(),
                                           1.0 / std::sqrt(double(sub.dim_constrained())));
    }
    return state;
}

}  // namespace detail

/// Fit one state per observed bath outcome and assemble the estimated
/// ensemble, with the empirical outcome probabilities as weights. Fitted
/// states are truncated to the constrained subsystem space. Per-group maxlk
/// seeds are derived from opts.seed and z_B, so results do not depend on
/// evaluation order.
inline Ensemble estimate_ensemble(const GroupedDataset& g, EstimatorMethod method,
                                  const MleOptions& opts = {}) {
    const SubsystemSpace sub(g.n_a);
    Ensemble e;
    e.n_a = g.n_a;
    e.dim_a = sub.dim_constrained();
    const std::size_t small = static_cast<std::size_t>(sub.dim_full());
    for (const auto& [key, shots] : g.groups) {
        const SiteConfig z_b = g.z_b_config(key);
        if (shots.size() < small)
            std::cerr << "[kdesign] warning: only " << shots.size() << " record(s) for z_B="
                      << z_b.to_string() << "; estimate will be poor\n";
        CoefficientAnsatz fitted;
        if (method == EstimatorMethod::frequentist) {
            fitted = frequentist_estimate(shots);
        } else {
            MleOptions group_opts = opts;
            group_opts.seed = derive_stream(opts.seed, {key})();
            fitted = maxlk_estimate(shots, group_opts).first;
        }
        e.entries.push_back({z_b, g.empirical_p.at(key),
                             detail::constrain_fitted_state(fitted.alpha, sub, z_b.to_string())});
    }
    return e;
}

}  // namespace kdesign
