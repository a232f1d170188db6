#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "kdesign/moment_operator.hpp"

namespace kdesign {

/// Element of S_k as a 0-based mapping i -> pi(i).
using Permutation = std::vector<int>;

/// All k! permutations in lexicographic order.
inline std::vector<Permutation> enumerate_permutations(int k) {
    if (k < 1 || k > 6)
        throw std::invalid_argument("enumerate_permutations: k outside supported range [1,6]");
    Permutation p(static_cast<std::size_t>(k));
    std::iota(p.begin(), p.end(), 0);
    std::vector<Permutation> all;
    do {
        all.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return all;
}

/// Operator permuting k copies of a d-dimensional system:
/// |i_1 ... i_k> -> |i_{pi(1)} ... i_{pi(k)}>. Stored as a column -> row map;
/// densified only where a full matrix is needed.
struct PermutationOperator {
    int d = 2;
    std::vector<int> row_of;  // row_of[col] = row holding the single 1

    Eigen::Index dim() const { return static_cast<Eigen::Index>(row_of.size()); }

    Eigen::MatrixXcd dense() const {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim(), dim());
        for (Eigen::Index col = 0; col < dim(); ++col)
            m(row_of[static_cast<std::size_t>(col)], col) = 1.0;
        return m;
    }
};

inline PermutationOperator permutation_operator(int d, const Permutation& pi) {
    if (d < 2) throw std::invalid_argument("permutation_operator: d must be >= 2");
    const int k = static_cast<int>(pi.size());
    Eigen::Index dim = 1;
    for (int i = 0; i < k; ++i) dim *= d;
    PermutationOperator op;
    op.d = d;
    op.row_of.resize(static_cast<std::size_t>(dim));
    std::vector<int> digits(static_cast<std::size_t>(k));
    for (Eigen::Index col = 0; col < dim; ++col) {
        Eigen::Index rest = col;
        for (int m = k - 1; m >= 0; --m) {
            digits[static_cast<std::size_t>(m)] = static_cast<int>(rest % d);
            rest /= d;
        }
        Eigen::Index row = 0;
        for (int m = 0; m < k; ++m)
            row = row * d + digits[static_cast<std::size_t>(pi[static_cast<std::size_t>(m)])];
        op.row_of[static_cast<std::size_t>(col)] = static_cast<int>(row);
    }
    return op;
}

/// Exact k-th moment of the Haar ensemble on a d-dimensional space:
/// sum over S_k of the permutation operators, divided by d(d+1)...(d+k-1).
/// Intended for 1 <= k <= 4 (memory grows as d^{2k}).
inline MomentOperator haar_moment(int d, int k) {
    const auto perms = enumerate_permutations(k);
    Eigen::Index dim = 1;
    for (int i = 0; i < k; ++i) dim *= d;
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& pi : perms) {
        const auto op = permutation_operator(d, pi);
        for (Eigen::Index col = 0; col < dim; ++col)
            sum(op.row_of[static_cast<std::size_t>(col)], col) += 1.0;
    }
    double denom = 1.0;
    for (int j = 0; j < k; ++j) denom *= static_cast<double>(d + j);
    return MomentOperator{k, sum / denom};
}

}  // namespace kdesign
