// Test-only reference implementations, kept independent of the library code
// paths they check.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "kdesign/basis_rotation.hpp"
#include "kdesign/constrained_space.hpp"
#include "kdesign/measurement.hpp"
#include "kdesign/rng.hpp"

namespace oracles {

// Count blockade-respecting bitstrings by filtering all strings of length n.
inline int brute_force_blockade_count(int n) {
    int count = 0;
    for (long v = 0; v < (1L << n); ++v) {
        std::string s;
        for (int i = n - 1; i >= 0; --i) s += ((v >> i) & 1) ? '1' : '0';
        if (s.find("11") == std::string::npos) ++count;
    }
    return count;
}

// Classic fixed-step RK4 on i d/dt psi = H psi.
inline Eigen::VectorXcd rk4_evolve(const Eigen::MatrixXcd& h, Eigen::VectorXcd psi, double t,
                                   double dt) {
    const std::complex<double> mi(0, -1);
    const int steps = static_cast<int>(std::ceil(t / dt));
    const double step = t / steps;
    for (int s = 0; s < steps; ++s) {
        const Eigen::VectorXcd k1 = mi * (h * psi);
        const Eigen::VectorXcd k2 = mi * (h * (psi + 0.5 * step * k1));
        const Eigen::VectorXcd k3 = mi * (h * (psi + 0.5 * step * k2));
        const Eigen::VectorXcd k4 = mi * (h * (psi + step * k3));
        psi += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return psi;
}

inline Eigen::VectorXcd haar_random_state(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd psi(dim);
    for (int i = 0; i < dim; ++i) psi[i] = std::complex<double>(gauss(rng), gauss(rng));
    psi.normalize();
    return psi;
}

inline Eigen::MatrixXcd random_unitary(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = std::complex<double>(gauss(rng), gauss(rng));
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
}

// Draw per-qubit-basis measurement records from an arbitrary state on the
// full 2^n product space (test-data generation for the estimators).
inline std::vector<kdesign::AShot> sample_full_state_records(const Eigen::VectorXcd& psi,
                                                             std::size_t shots,
                                                             std::mt19937_64& rng,
                                                             bool z_only = false) {
    const int n = static_cast<int>(std::lround(std::log2(double(psi.size()))));
    std::vector<kdesign::AShot> records;
    records.reserve(shots);
    for (std::size_t s = 0; s < shots; ++s) {
        std::string bases(static_cast<std::size_t>(n), 'Z');
        if (!z_only)
            for (auto& b : bases) b = "XYZ"[kdesign::uniform_index(rng, 3)];
        const Eigen::VectorXcd rotated = kdesign::apply_product_rotation(psi, bases);
        const double u = kdesign::uniform_unit(rng);
        double acc = 0;
        std::uint32_t outcome = static_cast<std::uint32_t>(psi.size() - 1);
        for (Eigen::Index r = 0; r < rotated.size(); ++r) {
            acc += std::norm(rotated[r]);
            if (u < acc) {
                outcome = static_cast<std::uint32_t>(r);
                break;
            }
        }
        records.push_back({bases, kdesign::SiteConfig{outcome, n}});
    }
    return records;
}

// Reduced density matrix of the leading n_a sites on the constrained A basis,
// by direct partial trace over bath outcomes in the Z basis.
inline Eigen::MatrixXcd reduced_density_matrix(const kdesign::ConstrainedSpace& space,
                                               const Eigen::VectorXcd& psi, int n_a) {
    const kdesign::SubsystemSpace sub(n_a);
    const int da = sub.dim_constrained();
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(da, da);
    for (const kdesign::SiteConfig& z_b :
         kdesign::enumerate_constrained_basis(space.n_sites - n_a)) {
        for (int i = 0; i < da; ++i) {
            const int gi = space.index_of(kdesign::join_configs(sub.basis[i], z_b));
            if (gi < 0) continue;
            for (int j = 0; j < da; ++j) {
                const int gj = space.index_of(kdesign::join_configs(sub.basis[j], z_b));
                if (gj < 0) continue;
                rho(i, j) += psi[gi] * std::conj(psi[gj]);
            }
        }
    }
    return rho;
}

}  // namespace oracles
