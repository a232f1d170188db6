#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>

#include "kdesign/constrained_space.hpp"

namespace kdesign {

/// Orthonormal eigenstates of the chosen single-qubit Pauli, expressed in the
/// computational basis. Outcome bit 0 is the +1 eigenstate. The Y phase
/// convention is |0>_Y = (|0> + i|1>)/sqrt(2); samplers and estimators both
/// read it from here.
inline std::array<Eigen::Vector2cd, 2> single_qubit_basis_states(char b) {
    using namespace std::complex_literals;
    const double s = 1.0 / std::sqrt(2.0);
    switch (b) {
        case 'Z':
            return {Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1)};
        case 'X':
            return {Eigen::Vector2cd(s, s), Eigen::Vector2cd(s, -s)};
        case 'Y':
            return {Eigen::Vector2cd(s, s * 1i), Eigen::Vector2cd(s, -s * 1i)};
        default:
            throw std::invalid_argument("single_qubit_basis_states: basis must be X, Y or Z");
    }
}

/// 2x2 matrix M with M(r, z) = <r|z> for outcome r of basis b, i.e. the map
/// from computational amplitudes to amplitudes in the measurement basis.
inline Eigen::Matrix2cd measurement_rotation(char b) {
    const auto states = single_qubit_basis_states(b);
    Eigen::Matrix2cd m;
    m.row(0) = states[0].adjoint();
    m.row(1) = states[1].adjoint();
    return m;
}

/// Rotate a full product-basis vector (dim 2^n, leftmost qubit most
/// significant) into the per-qubit measurement bases given by `bases`.
/// Entry r of the result is <r|psi> for the product outcome r.
inline Eigen::VectorXcd apply_product_rotation(Eigen::VectorXcd psi, const std::string& bases) {
    const int n = static_cast<int>(bases.size());
    if (psi.size() != (1 << n))
        throw std::invalid_argument("apply_product_rotation: dimension mismatch");
    for (int q = 0; q < n; ++q) {
        if (bases[static_cast<std::size_t>(q)] == 'Z') continue;  // identity
        const Eigen::Matrix2cd m = measurement_rotation(bases[static_cast<std::size_t>(q)]);
        const int bitpos = n - 1 - q;
        const int stride = 1 << bitpos;
        for (int base = 0; base < psi.size(); ++base) {
            if (base & stride) continue;
            const std::complex<double> c0 = psi[base];
            const std::complex<double> c1 = psi[base + stride];
            psi[base] = m(0, 0) * c0 + m(0, 1) * c1;
            psi[base + stride] = m(1, 0) * c0 + m(1, 1) * c1;
        }
    }
    return psi;
}

/// Computational-basis expansion of the product eigenstate |r> described by a
/// per-qubit basis string and outcome bits: w[z] = prod_j u_{b_j}(r_j)[z_j].
inline Eigen::VectorXcd outcome_projector_vector(const std::string& bases, SiteConfig outcome) {
    const int n = outcome.n;
    if (static_cast<int>(bases.size()) != n)
        throw std::invalid_argument("outcome_projector_vector: bases/outcome length mismatch");
    Eigen::VectorXcd w = Eigen::VectorXcd::Ones(1 << n);
    for (int q = 0; q < n; ++q) {
        const auto u = single_qubit_basis_states(bases[static_cast<std::size_t>(q)])
            [static_cast<std::size_t>(outcome.bit(q))];
        const int bitpos = n - 1 - q;
        for (int z = 0; z < w.size(); ++z) w[z] *= u[(z >> bitpos) & 1];
    }
    return w;
}

}  // namespace kdesign
