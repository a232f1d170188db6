#pragma once

#include <Eigen/Dense>

namespace kdesign {

/// k-th statistical moment of an ensemble of pure states: a Hermitian,
/// unit-trace, positive semidefinite operator on the k-fold tensor power of
/// the subsystem space. The leftmost tensor factor is the most significant
/// part of the composite index; ensemble and Haar moments share this
/// convention so their difference is meaningful.
struct MomentOperator {
    int k = 1;
    Eigen::MatrixXcd matrix;

    Eigen::Index dim() const { return matrix.rows(); }
};

/// v^{tensor k}; composite index has the first factor most significant.
inline Eigen::VectorXcd kron_power(const Eigen::VectorXcd& v, int k) {
    Eigen::VectorXcd t = v;
    for (int i = 1; i < k; ++i) {
        Eigen::VectorXcd next(t.size() * v.size());
        for (Eigen::Index a = 0; a < t.size(); ++a)
            next.segment(a * v.size(), v.size()) = t[a] * v;
        t.swap(next);
    }
    return t;
}

}  // namespace kdesign
