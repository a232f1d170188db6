#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdesign/haar_moments.hpp"
#include "kdesign/moment_operator.hpp"
#include "kdesign/projected_ensemble.hpp"

namespace kdesign {

struct TraceDistanceResult {
    int k = 0;
    double value = 0;
    std::string method_tag;  // exact | frequentist | maxlk | crbm
};

struct ScalingFit {
    double gamma_k = 0;
    double intercept = 0;
    double r_squared = 0;
};

/// delta = (1/2) sum_i |lambda_i(rho1 - rho2)|. Computed from the Hermitian
/// eigendecomposition of the difference, never via a matrix square root.
inline double trace_distance(const Eigen::MatrixXcd& rho1, const Eigen::MatrixXcd& rho2) {
    if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols())
        throw std::invalid_argument("trace_distance: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho1 - rho2,
                                                           Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const MomentOperator& rho1, const MomentOperator& rho2) {
    return trace_distance(rho1.matrix, rho2.matrix);
}

/// Distance of the ensemble's k-th moment from the exact Haar moment on the
/// same constrained subsystem space.
inline TraceDistanceResult delta_k(const Ensemble& e, int k,
                                   const std::string& method_tag = "exact") {
    const double value = trace_distance(ensemble_moment(e, k), haar_moment(e.dim_a, k));
    return TraceDistanceResult{k, value, method_tag};
}

struct MreResult {
    double mean = 0;
    double stddev = 0;
    int excluded = 0;  // grid points where the exact value was too small to divide by
};

/// Mean and standard deviation of (estimate - exact) / exact over an
/// M x T grid of repetitions and time points. Grid points with exact value
/// below 1e-12 are excluded with a warning.
inline MreResult mean_relative_error(const Eigen::MatrixXd& estimates,
                                     const Eigen::VectorXd& exact) {
    if (estimates.rows() < 1 || estimates.cols() < 1)
        throw std::invalid_argument("mean_relative_error: empty grid");
    if (estimates.cols() != exact.size())
        throw std::invalid_argument("mean_relative_error: time-grid mismatch");
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(estimates.size()));
    MreResult res;
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
        if (exact[i] < 1e-12) {
            std::cerr << "[kdesign] warning: exact trace distance ~0 at column " << i
                      << "; excluding from the relative error\n";
            res.excluded += static_cast<int>(estimates.rows());
            continue;
        }
        for (Eigen::Index j = 0; j < estimates.rows(); ++j)
            samples.push_back((estimates(j, i) - exact[i]) / exact[i]);
    }
    if (samples.empty())
        throw std::domain_error("mean_relative_error: no usable grid points");
    double mean = 0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0;
    for (double s : samples) var += (s - mean) * (s - mean);
    res.mean = mean;
    res.stddev = samples.size() > 1
                     ? std::sqrt(var / static_cast<double>(samples.size() - 1))
                     : 0.0;
    return res;
}

/// Least-squares fit of log(delta) against log(N_B); the scaling exponent is
/// minus the slope.
inline ScalingFit fit_scaling(const std::vector<double>& nb_values,
                              const std::vector<double>& delta_means) {
    if (nb_values.size() != delta_means.size() || nb_values.size() < 3)
        throw std::invalid_argument("fit_scaling: need at least 3 matched points");
    const auto n = static_cast<double>(nb_values.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < nb_values.size(); ++i) {
        if (nb_values[i] <= 0 || delta_means[i] <= 0)
            throw std::invalid_argument("fit_scaling: values must be positive");
        const double x = std::log(nb_values[i]);
        const double y = std::log(delta_means[i]);
        xs.push_back(x);
        ys.push_back(y);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double y_mean = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fit = intercept + slope * xs[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - y_mean) * (ys[i] - y_mean);
    }
    ScalingFit out;
    out.gamma_k = -slope;
    out.intercept = intercept;
    out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

}  // namespace kdesign
