#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "kdesign/haar_moments.hpp"
#include "kdesign/metrics.hpp"
#include "oracles.hpp"

using namespace kdesign;

TEST_CASE("permutation enumeration") {
    CHECK(enumerate_permutations(1) == std::vector<Permutation>{{0}});

    const auto s3 = enumerate_permutations(3);
    REQUIRE(s3.size() == 6);
    // the six elements of S_3, as 0-based mappings
    const std::set<Permutation> expected{{0, 1, 2}, {1, 0, 2}, {2, 1, 0},
                                         {0, 2, 1}, {2, 0, 1}, {1, 2, 0}};
    CHECK(std::set<Permutation>(s3.begin(), s3.end()) == expected);

    const auto s4 = enumerate_permutations(4);
    CHECK(s4.size() == 24);
    CHECK(std::set<Permutation>(s4.begin(), s4.end()).size() == 24);

    CHECK_THROWS_AS(enumerate_permutations(0), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_permutations(7), std::invalid_argument);
}

TEST_CASE("permutation operators") {
    const auto identity = permutation_operator(3, {0, 1, 2});
    CHECK(identity.dense().isApprox(Eigen::MatrixXcd::Identity(27, 27)));

    const auto swap = permutation_operator(2, {1, 0});
    Eigen::MatrixXcd expected(4, 4);
    expected << 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1;
    CHECK(swap.dense().isApprox(expected));

    // the two 3-cycles of S_3 are inverses of each other
    const auto c1 = permutation_operator(2, {2, 0, 1});
    const auto c2 = permutation_operator(2, {1, 2, 0});
    CHECK((c1.dense() * c2.dense()).isApprox(Eigen::MatrixXcd::Identity(8, 8)));

    // every operator is a 0/1 matrix with one entry per row and column
    for (const auto& pi : enumerate_permutations(3)) {
        const auto op = permutation_operator(2, pi);
        const Eigen::MatrixXcd dense = op.dense();
        CHECK((dense * dense.adjoint()).isApprox(Eigen::MatrixXcd::Identity(8, 8)));
    }
}

TEST_CASE("haar moment closed forms") {
    const MomentOperator k1 = haar_moment(4, 1);
    CHECK(k1.matrix.isApprox(Eigen::MatrixXcd::Identity(4, 4) / 4.0));

    const MomentOperator k2 = haar_moment(2, 2);
    Eigen::MatrixXcd swap(4, 4);
    swap << 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1;
    CHECK(k2.matrix.isApprox((Eigen::MatrixXcd::Identity(4, 4) + swap) / 6.0));
}

TEST_CASE("haar moment trace and positivity") {
    for (int d : {2, 3, 4})
        for (int k : {1, 2, 3}) {
            const MomentOperator m = haar_moment(d, k);
            CHECK(std::abs(m.matrix.trace() - std::complex<double>(1, 0)) < 1e-12);
            CHECK((m.matrix - m.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.matrix);
            CHECK(es.eigenvalues().minCoeff() > -1e-12);
        }
}

TEST_CASE("haar moment matches Monte-Carlo averaging over random states") {
    std::mt19937_64 rng(7041);
    const int d = 3, k = 2, samples = 100000;
    Eigen::MatrixXcd mc = Eigen::MatrixXcd::Zero(9, 9);
    for (int s = 0; s < samples; ++s) {
        const Eigen::VectorXcd psi = oracles::haar_random_state(d, rng);
        const Eigen::VectorXcd t = kron_power(psi, k);
        mc.noalias() += t * t.adjoint();
    }
    mc /= samples;
    CHECK((mc - haar_moment(d, k).matrix).cwiseAbs().maxCoeff() < 2e-2);
}

TEST_CASE("haar moment is invariant under tensor-power conjugation") {
    std::mt19937_64 rng(99);
    const MomentOperator m = haar_moment(3, 2);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXcd u = oracles::random_unitary(3, rng);
        Eigen::MatrixXcd u2(9, 9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) u2.block(3 * i, 3 * j, 3, 3) = u(i, j) * u;
        CHECK(((u2 * m.matrix * u2.adjoint()) - m.matrix).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("haar moment has zero trace distance to itself") {
    CHECK(trace_distance(haar_moment(3, 2), haar_moment(3, 2)) < 1e-14);
}
