#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kdesign/constrained_space.hpp"

namespace kdesign {

using HermitianOperator = Eigen::MatrixXcd;

/// Physical parameters of the driven chain, in angular units (hbar = 1):
/// omega and delta in rad/us, c6 in rad/us * um^6, lattice spacing a in um.
struct RydbergParams {
    double omega = 0;
    double delta = 0;
    double c6 = 0;
    double a = 1;

    /// Build from the conventional experimental quantities: Omega/(2pi) and
    /// Delta/(2pi) in MHz, C6 in GHz um^6, spacing in um. When
    /// `c6_includes_planck` the C6 value is an ordinary (h-) frequency like
    /// Omega and Delta and picks up the same 2pi; otherwise it is taken as
    /// already angular.
    static RydbergParams from_linear_frequencies(double omega_mhz, double delta_mhz,
                                                 double c6_ghz_um6, double a_um,
                                                 bool c6_includes_planck = true) {
        const double two_pi = 2.0 * std::numbers::pi;
        RydbergParams p;
        p.omega = two_pi * omega_mhz;
        p.delta = two_pi * delta_mhz;
        p.c6 = (c6_includes_planck ? two_pi : 1.0) * c6_ghz_um6 * 1e3;  // GHz -> MHz
        p.a = a_um;
        if (p.a <= 0) throw std::invalid_argument("RydbergParams: lattice spacing must be > 0");
        return p;
    }
};

/// H = (omega/2) sum_i sigma^x_i - delta sum_i n_i
///     + (c6/a^6) sum_{j>i} n_i n_j / |i-j|^6
/// restricted to the blockade-constrained space: spin flips that would create
/// adjacent excitations are dropped, the |i-j| >= 2 interaction tail is kept.
inline HermitianOperator build_hamiltonian(const RydbergParams& params,
                                           const ConstrainedSpace& space) {
    if (params.a <= 0) throw std::invalid_argument("build_hamiltonian: lattice spacing <= 0");
    const int d = space.dim();
    const int n = space.n_sites;
    const double v0 = params.c6 / std::pow(params.a, 6);
    HermitianOperator h = HermitianOperator::Zero(d, d);
    for (int col = 0; col < d; ++col) {
        const SiteConfig c = space.basis[static_cast<std::size_t>(col)];
        double diag = -params.delta * c.excitation_count();
        for (int i = 0; i < n; ++i) {
            if (!c.bit(i)) continue;
            for (int j = i + 1; j < n; ++j)
                if (c.bit(j)) diag += v0 / std::pow(static_cast<double>(j - i), 6);
        }
        h(col, col) = diag;
        for (int i = 0; i < n; ++i) {
            const SiteConfig flipped{c.bits ^ (1u << (n - 1 - i)), n};
            const int row = space.index_of(flipped);
            if (row >= 0) h(row, col) = params.omega / 2.0;
        }
    }
    return h;
}

/// Spectral decomposition H = V diag(E) V^dagger, eigenvalues ascending.
/// Immutable once built; evolve() is pure and may run concurrently.
struct Propagator {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXcd eigenvectors;
};

inline Propagator diagonalize(const HermitianOperator& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("diagonalize: matrix not square");
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("diagonalize: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("diagonalize: eigensolver failed");
    return Propagator{solver.eigenvalues(), solver.eigenvectors()};
}

/// |psi(t)> = V exp(-i E t) V^dagger |psi0>, t in us.
inline StateVector evolve(const Propagator& prop, const StateVector& psi0, double t) {
    const std::complex<double> mit(0.0, -t);
    const Eigen::VectorXcd phases = (mit * prop.eigenvalues.array()).exp();
    StateVector out;
    out.tag = psi0.tag;
    out.amplitudes =
        prop.eigenvectors * (phases.asDiagonal() * (prop.eigenvectors.adjoint() * psi0.amplitudes));
    return out;
}

/// All atoms in the ground state |gg...g>; this configuration is the
/// lexicographically first basis element.
inline StateVector initial_ground_state(const ConstrainedSpace& space) {
    StateVector psi;
    psi.tag = BasisTag::global_constrained;
    psi.amplitudes = Eigen::VectorXcd::Zero(space.dim());
    const int i0 = space.index_of(SiteConfig{0, space.n_sites});
    psi.amplitudes[i0] = 1.0;
    return psi;
}

}  // namespace kdesign
