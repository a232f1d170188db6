#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kdesign {

/// One configuration of a spin chain. Site 0 is the leftmost site and is
/// stored in the most significant bit, so integer order on `bits` equals
/// lexicographic order on the bitstring (0 = ground, 1 = Rydberg).
struct SiteConfig {
    std::uint32_t bits = 0;
    int n = 0;

    int bit(int site) const { return static_cast<int>(bits >> (n - 1 - site)) & 1; }

    /// True iff no two adjacent sites are both excited.
    bool blockade_ok() const { return (bits & (bits >> 1)) == 0; }

    int excitation_count() const { return __builtin_popcount(bits); }

    std::string to_string() const {
        std::string s(static_cast<std::size_t>(n), '0');
        for (int i = 0; i < n; ++i)
            if (bit(i)) s[static_cast<std::size_t>(i)] = '1';
        return s;
    }

    static SiteConfig from_string(std::string_view s) {
        if (s.size() > 31) throw std::invalid_argument("SiteConfig: string too long");
        SiteConfig c{0, static_cast<int>(s.size())};
        for (char ch : s) {
            if (ch != '0' && ch != '1')
                throw std::invalid_argument("SiteConfig: expected a 0/1 string");
            c.bits = (c.bits << 1) | static_cast<std::uint32_t>(ch == '1');
        }
        return c;
    }

    friend bool operator==(const SiteConfig& a, const SiteConfig& b) {
        return a.n == b.n && a.bits == b.bits;
    }
    friend bool operator<(const SiteConfig& a, const SiteConfig& b) {
        return a.n != b.n ? a.n < b.n : a.bits < b.bits;
    }
};

/// All blockade-respecting configurations of an open chain of n sites, in
/// lexicographic order. The count follows d(n) = d(n-1) + d(n-2) with
/// d(1) = 2, d(2) = 3.
inline std::vector<SiteConfig> enumerate_constrained_basis(int n) {
    if (n < 1) throw std::invalid_argument("enumerate_constrained_basis: n must be >= 1");
    if (n > 20) throw std::invalid_argument("enumerate_constrained_basis: n > 20 unsupported");
    std::vector<SiteConfig> basis;
    for (std::uint32_t v = 0; v < (1u << n); ++v)
        if ((v & (v >> 1)) == 0) basis.push_back(SiteConfig{v, n});
    return basis;
}

/// Split a chain configuration into the leading n_a sites (subsystem A) and
/// the remaining sites (bath B). join_configs inverts the split.
inline std::pair<SiteConfig, SiteConfig> split_config(SiteConfig c, int n_a) {
    if (n_a >= c.n) throw std::invalid_argument("split_config: n_a must be < chain length");
    const int n_b = c.n - n_a;
    SiteConfig a{c.bits >> n_b, n_a};
    SiteConfig b{c.bits & ((1u << n_b) - 1u), n_b};
    return {a, b};
}

inline SiteConfig join_configs(SiteConfig a, SiteConfig b) {
    return SiteConfig{(a.bits << b.n) | b.bits, a.n + b.n};
}

/// False iff the sites on both sides of the A|B cut are excited.
inline bool boundary_compatible(SiteConfig a, SiteConfig b) {
    if (a.n == 0 || b.n == 0) return true;
    return !(a.bit(a.n - 1) == 1 && b.bit(0) == 1);
}

/// Blockade-constrained Hilbert space of a chain, with an optional A|B
/// bipartition recorded for bookkeeping. Immutable after construction and
/// safe for shared concurrent reads.
struct ConstrainedSpace {
    int n_sites = 0;
    int n_a = 0;
    std::vector<SiteConfig> basis;
    std::vector<int> index;  // config bits -> dense index, -1 outside the space

    explicit ConstrainedSpace(int n, int n_a_ = 0) : n_sites(n), n_a(n_a_) {
        if (n_a_ < 0 || n_a_ > n)
            throw std::invalid_argument("ConstrainedSpace: invalid bipartition");
        basis = enumerate_constrained_basis(n);
        index.assign(1u << n, -1);
        for (std::size_t i = 0; i < basis.size(); ++i)
            index[basis[i].bits] = static_cast<int>(i);
        // The projected-ensemble construction assumes N_A << N_B; not enforced.
        if (n_a > 0 && n_a >= n_b())
            std::cerr << "[kdesign] warning: n_a=" << n_a << " is not small against n_b="
                      << n_b() << "\n";
    }

    int n_b() const { return n_sites - n_a; }
    int dim() const { return static_cast<int>(basis.size()); }

    int index_of(SiteConfig c) const {
        if (c.n != n_sites || c.bits >= index.size()) return -1;
        return index[c.bits];
    }
};

/// Constrained basis of a subsystem of n_a sites, together with its embedding
/// into the full 2^{n_a} product basis.
struct SubsystemSpace {
    int n_a = 0;
    std::vector<SiteConfig> basis;
    std::vector<int> index;

    explicit SubsystemSpace(int n_a_) : n_a(n_a_) {
        basis = enumerate_constrained_basis(n_a);
        index.assign(1u << n_a, -1);
        for (std::size_t i = 0; i < basis.size(); ++i)
            index[basis[i].bits] = static_cast<int>(i);
    }

    int dim_constrained() const { return static_cast<int>(basis.size()); }
    int dim_full() const { return 1 << n_a; }
    int index_of(SiteConfig c) const {
        if (c.n != n_a || c.bits >= index.size()) return -1;
        return index[c.bits];
    }
};

enum class BasisTag {
    global_constrained,     // blockade-constrained space of the full chain
    subsystem_constrained,  // blockade-constrained space of subsystem A
    subsystem_full,         // full 2^{n_a} product basis of subsystem A
};

/// Normalized complex amplitudes over a declared basis.
struct StateVector {
    Eigen::VectorXcd amplitudes;
    BasisTag tag = BasisTag::global_constrained;
};

/// Place constrained-subsystem amplitudes at their positions in the full
/// 2^{n_a} product basis (blockade-violating configurations get 0).
inline Eigen::VectorXcd embed_in_full_basis(const Eigen::VectorXcd& constrained,
                                            const SubsystemSpace& sub) {
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(sub.dim_full());
    for (int i = 0; i < sub.dim_constrained(); ++i)
        full[static_cast<int>(sub.basis[static_cast<std::size_t>(i)].bits)] = constrained[i];
    return full;
}

/// Drop blockade-violating amplitudes of a full product-basis vector and
/// renormalize. Returns the squared weight that survived the projection.
inline double project_to_constrained(const Eigen::VectorXcd& full, const SubsystemSpace& sub,
                                     Eigen::VectorXcd& out) {
    out.resize(sub.dim_constrained());
    for (int i = 0; i < sub.dim_constrained(); ++i)
        out[i] = full[static_cast<int>(sub.basis[static_cast<std::size_t>(i)].bits)];
    const double w = out.squaredNorm();
    if (w > 0) out /= std::sqrt(w);
    return w;
}

}  // namespace kdesign
