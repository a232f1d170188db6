#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kdesign/estimator_crbm.hpp"
#include "oracles.hpp"

using namespace kdesign;

namespace {

RbmParams random_params(int v, int h, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, sigma);
    RbmParams p = RbmParams::zeros(v, h);
    for (int i = 0; i < v; ++i) p.b[i] = gauss(rng);
    for (int j = 0; j < h; ++j) p.c[j] = gauss(rng);
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < h; ++j) p.w(i, j) = gauss(rng);
    return p;
}

// Joint-enumeration model average of the energy gradient, written directly
// from E(z,h) = -b.z - c.h - z.W.h (independent of the library's
// effective-energy path).
Eigen::VectorXd brute_force_negative_phase(const RbmParams& p) {
    const int v = p.visible(), h = p.hidden();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.param_count());
    double norm = 0;
    for (std::uint32_t z = 0; z < (1u << v); ++z)
        for (std::uint32_t hh = 0; hh < (1u << h); ++hh) {
            double e = 0;
            for (int i = 0; i < v; ++i) e -= p.b[i] * ((z >> (v - 1 - i)) & 1);
            for (int j = 0; j < h; ++j) e -= p.c[j] * ((hh >> (h - 1 - j)) & 1);
            for (int i = 0; i < v; ++i)
                for (int j = 0; j < h; ++j)
                    e -= p.w(i, j) * ((z >> (v - 1 - i)) & 1) * ((hh >> (h - 1 - j)) & 1);
            const double wgt = std::exp(-e);
            norm += wgt;
            for (int i = 0; i < v; ++i) g[i] += -double((z >> (v - 1 - i)) & 1) * wgt;
            for (int j = 0; j < h; ++j) g[v + j] += -double((hh >> (h - 1 - j)) & 1) * wgt;
            for (int i = 0; i < v; ++i)
                for (int j = 0; j < h; ++j)
                    g[v + h + i * h + j] +=
                        -double(((z >> (v - 1 - i)) & 1) * ((hh >> (h - 1 - j)) & 1)) * wgt;
        }
    return g / norm;
}

}  // namespace

TEST_CASE("effective energy closed forms") {
    const RbmParams zero = RbmParams::zeros(2, 3);
    CHECK(effective_energy(zero, SiteConfig::from_string("10")) ==
          Catch::Approx(-3 * std::log(2.0)));
    CHECK(effective_energy(zero, SiteConfig::from_string("01")) ==
          Catch::Approx(-3 * std::log(2.0)));

    std::mt19937_64 rng(17);
    const RbmParams p = random_params(2, 3, 0.8, rng);
    double expected = 0;
    for (int j = 0; j < 3; ++j) expected -= std::log1p(std::exp(p.c[j]));
    CHECK(effective_energy(p, SiteConfig::from_string("00")) == Catch::Approx(expected));
}

TEST_CASE("effective energy agrees with the hidden-layer sum") {
    std::mt19937_64 rng(18);
    const RbmParams p = random_params(2, 3, 1.0, rng);
    for (std::uint32_t z = 0; z < 4; ++z) {
        double direct = 0;
        for (std::uint32_t h = 0; h < 8; ++h)
            direct += std::exp(-joint_energy(p, SiteConfig{z, 2}, SiteConfig{h, 3}));
        CHECK(std::exp(-effective_energy(p, SiteConfig{z, 2})) ==
              Catch::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("partition function by exhaustive enumeration") {
    const RbmParams zero = RbmParams::zeros(2, 3);
    CHECK(partition_function(zero) == Catch::Approx(32.0));

    std::mt19937_64 rng(19);
    const RbmParams p = random_params(2, 3, 1.2, rng);
    double via_effective = 0;
    for (std::uint32_t z = 0; z < 4; ++z)
        via_effective += std::exp(-effective_energy(p, SiteConfig{z, 2}));
    CHECK(partition_function(p) == Catch::Approx(via_effective).epsilon(1e-10));
    CHECK(partition_function(p) > 0);

    CHECK_THROWS_AS(partition_function(RbmParams::zeros(15, 15)), std::runtime_error);
}

TEST_CASE("cRBM amplitudes are normalized and phases come only from mu") {
    std::mt19937_64 rng(20);
    ComplexRbm m{random_params(2, 3, 0.9, rng), random_params(2, 3, 0.9, rng)};
    double total = 0;
    for (std::uint32_t z = 0; z < 4; ++z) total += std::norm(psi_crbm(m, SiteConfig{z, 2}));
    CHECK(total == Catch::Approx(1.0).epsilon(1e-10));

    // modulus does not depend on the phase network
    ComplexRbm m2 = m;
    m2.phase = random_params(2, 3, 2.0, rng);
    for (std::uint32_t z = 0; z < 4; ++z)
        CHECK(std::abs(psi_crbm(m, SiteConfig{z, 2})) ==
              Catch::Approx(std::abs(psi_crbm(m2, SiteConfig{z, 2}))));

    // zero phase network: all relative phases vanish
    ComplexRbm flat{m.amplitude, RbmParams::zeros(2, 3)};
    const std::complex<double> ref =
        psi_crbm(flat, SiteConfig{0, 2}) / std::abs(psi_crbm(flat, SiteConfig{0, 2}));
    for (std::uint32_t z = 1; z < 4; ++z) {
        const std::complex<double> phase =
            psi_crbm(flat, SiteConfig{z, 2}) / std::abs(psi_crbm(flat, SiteConfig{z, 2}));
        CHECK(std::abs(phase - ref) < 1e-12);
    }
}

TEST_CASE("energy gradient matches finite differences") {
    std::mt19937_64 rng(21);
    const RbmParams p = random_params(2, 3, 0.7, rng);
    const SiteConfig z = SiteConfig::from_string("10");
    const Eigen::VectorXd grad = grad_effective_energy(p, z);
    const double h = 1e-6;
    int idx = 0;
    auto check_fd = [&](auto set, double analytic) {
        RbmParams up = p, down = p;
        set(up, h);
        set(down, -h);
        const double fd = (effective_energy(up, z) - effective_energy(down, z)) / (2 * h);
        CHECK(std::abs(fd - analytic) < 1e-5 * std::max(1.0, std::abs(analytic)));
        ++idx;
    };
    for (int i = 0; i < 2; ++i)
        check_fd([i](RbmParams& q, double d) { q.b[i] += d; }, grad[idx]);
    for (int j = 0; j < 3; ++j)
        check_fd([j](RbmParams& q, double d) { q.c[j] += d; }, grad[idx]);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            check_fd([i, j](RbmParams& q, double d) { q.w(i, j) += d; }, grad[idx]);
}

TEST_CASE("rotated-basis likelihood gradient matches finite differences") {
    std::mt19937_64 rng(22);
    const Eigen::VectorXcd psi = oracles::haar_random_state(4, rng);
    auto records = oracles::sample_full_state_records(psi, 40, rng);
    records.push_back({"ZZ", SiteConfig::from_string("00")});  // ensure a Z record

    ComplexRbm m{random_params(2, 3, 0.4, rng), random_params(2, 3, 0.4, rng)};
    const auto [g_theta, g_mu] = rbm_positive_phase(m, records);
    const Eigen::VectorXd full_theta = g_theta - rbm_negative_phase_exact(m.amplitude);

    const double h = 1e-6;
    auto nll_at = [&records](const ComplexRbm& model) { return crbm_nll(model, records); };
    auto check = [&](bool phase_net, auto set, double analytic) {
        ComplexRbm up = m, down = m;
        set(phase_net ? up.phase : up.amplitude, h);
        set(phase_net ? down.phase : down.amplitude, -h);
        const double fd = (nll_at(up) - nll_at(down)) / (2 * h);
        CHECK(std::abs(fd - analytic) < 2e-4 * std::max(1.0, std::abs(analytic)));
    };
    int idx = 0;
    for (int i = 0; i < 2; ++i, ++idx)
        check(false, [i](RbmParams& q, double d) { q.b[i] += d; }, full_theta[idx]);
    for (int j = 0; j < 3; ++j, ++idx)
        check(false, [j](RbmParams& q, double d) { q.c[j] += d; }, full_theta[idx]);
    idx = 0;
    for (int i = 0; i < 2; ++i, ++idx)
        check(true, [i](RbmParams& q, double d) { q.b[i] += d; }, g_mu[idx]);
    for (int j = 0; j < 3; ++j, ++idx)
        check(true, [j](RbmParams& q, double d) { q.c[j] += d; }, g_mu[idx]);
}

TEST_CASE("uniform data at zero parameters is a fixed point of the exact update") {
    std::vector<AShot> records;
    for (std::uint32_t z = 0; z < 4; ++z)
        records.push_back({"ZZ", SiteConfig{z, 2}});
    const ComplexRbm m{RbmParams::zeros(2, 3), RbmParams::zeros(2, 3)};
    const auto [g_theta, g_mu] = rbm_positive_phase(m, records);
    const Eigen::VectorXd full = g_theta - rbm_negative_phase_exact(m.amplitude);
    CHECK(full.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(g_mu.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("exact-gradient training decreases the KL divergence monotonically") {
    std::mt19937_64 rng(23);
    // empirical target distribution from Z-only records
    const double probs[4] = {0.5, 0.25, 0.25, 0.0};
    std::vector<AShot> records;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(4);
    for (int s = 0; s < 400; ++s) {
        const double u = uniform_unit(rng);
        const std::uint32_t z = u < 0.5 ? 0 : (u < 0.75 ? 1 : 2);
        records.push_back({"ZZ", SiteConfig{z, 2}});
        q[z] += 1.0 / 400;
    }
    (void)probs;

    ComplexRbm m{random_params(2, 3, 0.1, rng), RbmParams::zeros(2, 3)};
    auto kl = [&q](const RbmParams& theta) {
        const double z_sum = partition_function(theta);
        double v = 0;
        for (std::uint32_t z = 0; z < 4; ++z) {
            if (q[z] <= 0) continue;
            const double p = std::exp(-effective_energy(theta, SiteConfig{z, 2})) / z_sum;
            v += q[z] * std::log(q[z] / p);
        }
        return v;
    };

    double last = kl(m.amplitude);
    for (int step = 0; step < 50; ++step) {
        const auto [g_theta, g_mu] = rbm_positive_phase(m, records);
        const Eigen::VectorXd full = g_theta - rbm_negative_phase_exact(m.amplitude);
        m.amplitude.b -= 0.05 * full.head(2);
        m.amplitude.c -= 0.05 * full.segment(2, 3);
        for (int i = 0; i < 2; ++i)
            m.amplitude.w.row(i) -= 0.05 * full.segment(2 + 3 + i * 3, 3).transpose();
        const double now = kl(m.amplitude);
        CHECK(now <= last + 1e-12);
        last = now;
    }
}

TEST_CASE("CD gradients align with the joint-enumeration gradient") {
    std::mt19937_64 rng(24);
    // fixed Z-only batch for the positive phase
    std::vector<AShot> records;
    for (int s = 0; s < 32; ++s)
        records.push_back({"ZZ", SiteConfig{static_cast<std::uint32_t>(s % 3), 2}});

    double cosine_sum = 0;
    const int draws = 100;
    for (int d = 0; d < draws; ++d) {
        const ComplexRbm m{random_params(2, 3, 0.5, rng), RbmParams::zeros(2, 3)};
        const Eigen::VectorXd pos = rbm_positive_phase(m, records).first;
        const Eigen::VectorXd exact = pos - brute_force_negative_phase(m.amplitude);

        std::vector<std::uint32_t> chains;
        for (int c = 0; c < 128; ++c)
            chains.push_back(records[c % records.size()].bits.bits);
        const Eigen::VectorXd cd =
            pos - rbm_negative_phase_cd(m.amplitude, chains, 50, rng);
        cosine_sum += exact.dot(cd) / (exact.norm() * cd.norm());
    }
    CHECK(cosine_sum / draws > 0.9);
}

TEST_CASE("training learns Z-basis probabilities") {
    std::mt19937_64 rng(25);
    std::vector<AShot> records;
    for (int s = 0; s < 2000; ++s) {
        const double u = uniform_unit(rng);
        const std::uint32_t z = u < 0.5 ? 0 : (u < 0.75 ? 1 : 2);
        records.push_back({"ZZ", SiteConfig{z, 2}});
    }
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(4);
    for (const auto& r : records) freq[r.bits.bits] += 1.0 / double(records.size());

    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 4;
    const ComplexRbm m = train(records, cfg);
    const Eigen::VectorXcd psi = crbm_state_vector(m);
    double tv = 0;
    for (int z = 0; z < 4; ++z) tv += std::abs(std::norm(psi[z]) - freq[z]);
    CHECK(0.5 * tv < 0.05);
}

TEST_CASE("training requires at least one Z-basis record") {
    const std::vector<AShot> rotated{{"XY", SiteConfig::from_string("01")},
                                     {"YX", SiteConfig::from_string("10")}};
    CHECK_THROWS_AS(train(rotated, TrainConfig{}), training_unsupported);
}

TEST_CASE("crbm ensembles renormalize after skipping untrainable groups") {
    Dataset ds;
    ds.n = 4;
    ds.n_a = 2;
    std::int64_t id = 0;
    // trainable group (has Z records) under z_B = 00
    for (int i = 0; i < 30; ++i)
        ds.records.push_back({0.0, id++, "ZZ", SiteConfig{std::uint32_t(i % 3), 2},
                              SiteConfig::from_string("00")});
    for (int i = 0; i < 10; ++i)
        ds.records.push_back({0.0, id++, "XY", SiteConfig{std::uint32_t(i % 4), 2},
                              SiteConfig::from_string("00")});
    // untrainable group (rotated records only) under z_B = 01
    for (int i = 0; i < 10; ++i)
        ds.records.push_back({0.0, id++, "XX", SiteConfig{std::uint32_t(i % 4), 2},
                              SiteConfig::from_string("01")});

    TrainConfig cfg;
    cfg.epochs = 20;
    const Ensemble e = crbm_estimate_ensemble(group_by_outcome(ds), cfg);
    REQUIRE(e.entries.size() == 1);
    CHECK(e.entries[0].prob == Catch::Approx(1.0));
    CHECK(e.entries[0].state.norm() == Catch::Approx(1.0).margin(1e-10));
}
