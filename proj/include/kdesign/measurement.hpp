#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdesign/basis_rotation.hpp"
#include "kdesign/constrained_space.hpp"
#include "kdesign/projected_ensemble.hpp"
#include "kdesign/rng.hpp"

namespace kdesign {

/// One simulated shot: per-qubit measurement bases and outcome bits for
/// subsystem A, computational-basis outcome for the bath. A-outcome bits live
/// in the full product basis (X/Y outcomes are not blockade constrained);
/// bath outcomes always respect the blockade.
struct MeasurementRecord {
    double time_us = 0;
    std::int64_t shot_id = 0;
    std::string a_bases;
    SiteConfig a_bits;
    SiteConfig b_bits;
};

struct Dataset {
    int n = 0;
    int n_a = 0;
    std::uint64_t seed = 0;
    std::vector<MeasurementRecord> records;

    std::size_t size() const { return records.size(); }
};

enum class SamplingMode { random_basis, z_only };

/// Subsystem shots of one z_B group, stripped of the shared bath outcome.
struct AShot {
    std::string bases;
    SiteConfig bits;
};

/// Dataset partitioned by bath outcome, with empirical outcome probabilities
/// (occurrence counts over the dataset size).
struct GroupedDataset {
    int n_a = 0;
    int n_b = 0;
    std::size_t total = 0;
    std::map<std::uint32_t, std::vector<AShot>> groups;  // keyed by z_B bits
    std::map<std::uint32_t, double> empirical_p;

    SiteConfig z_b_config(std::uint32_t key) const { return SiteConfig{key, n_b}; }
};

/// Draws projective measurements from |Psi>: every A qubit gets a basis from
/// {X, Y, Z} (uniform and independent per qubit), the bath is read in Z. The
/// state is rotated into the chosen product basis and the joint outcome
/// (r_A, z_B) is drawn in one categorical draw from the Born weights
/// p(z_B) |<r_A|psi_{z_B}>|^2. Rotated weight tables are cached per basis
/// string, so repeated draws from one state are cheap.
class BornSampler {
public:
    BornSampler(const ConstrainedSpace& space, const StateVector& psi, int n_a)
        : n_a_(n_a), n_b_(space.n_sites - n_a), sub_(n_a) {
        const Ensemble e = exact_ensemble(space, psi, n_a);
        for (const auto& entry : e.entries) {
            zb_.push_back(entry.z_b);
            pz_.push_back(entry.prob);
            full_states_.push_back(embed_in_full_basis(entry.state, sub_));
        }
    }

    MeasurementRecord draw(std::mt19937_64& rng, SamplingMode mode) {
        std::string bases(static_cast<std::size_t>(n_a_), 'Z');
        if (mode == SamplingMode::random_basis)
            for (auto& b : bases) b = "XYZ"[uniform_index(rng, 3)];
        const std::vector<double>& cdf = weight_table(bases);
        const double u = uniform_unit(rng) * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        auto flat = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
        while (flat > 0 && cdf[flat] == cdf[flat - 1]) --flat;  // never a zero-weight cell
        const std::size_t dim_full = static_cast<std::size_t>(sub_.dim_full());
        MeasurementRecord rec;
        rec.a_bases = bases;
        rec.a_bits = SiteConfig{static_cast<std::uint32_t>(flat % dim_full), n_a_};
        rec.b_bits = zb_[flat / dim_full];
        return rec;
    }

private:
    const std::vector<double>& weight_table(const std::string& bases) {
        auto [it, inserted] = cache_.try_emplace(bases);
        if (inserted) {
            std::vector<double>& cdf = it->second;
            cdf.reserve(zb_.size() * static_cast<std::size_t>(sub_.dim_full()));
            double acc = 0;
            for (std::size_t z = 0; z < zb_.size(); ++z) {
                const Eigen::VectorXcd rotated = apply_product_rotation(full_states_[z], bases);
                for (Eigen::Index r = 0; r < rotated.size(); ++r) {
                    acc += pz_[z] * std::norm(rotated[r]);
                    cdf.push_back(acc);
                }
            }
        }
        return it->second;
    }

    int n_a_;
    int n_b_;
    SubsystemSpace sub_;
    std::vector<SiteConfig> zb_;
    std::vector<double> pz_;
    std::vector<Eigen::VectorXcd> full_states_;
    std::map<std::string, std::vector<double>> cache_;
};

/// Single random-basis shot. Convenience wrapper that rebuilds the sampler;
/// use BornSampler or draw_dataset for repeated draws.
inline MeasurementRecord draw_shot(const ConstrainedSpace& space, const StateVector& psi, int n_a,
                                   std::mt19937_64& rng) {
    return BornSampler(space, psi, n_a).draw(rng, SamplingMode::random_basis);
}

/// `size` i.i.d. shots from |Psi>. z_only forces every A basis to Z (the
/// frequentist measurement protocol).
inline Dataset draw_dataset(const ConstrainedSpace& space, const StateVector& psi, int n_a,
                            std::size_t size, std::mt19937_64& rng, SamplingMode mode,
                            double time_us = 0) {
    if (size < 1) throw std::invalid_argument("draw_dataset: size must be >= 1");
    BornSampler sampler(space, psi, n_a);
    Dataset ds;
    ds.n = space.n_sites;
    ds.n_a = n_a;
    ds.records.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        MeasurementRecord rec = sampler.draw(rng, mode);
        rec.time_us = time_us;
        rec.shot_id = static_cast<std::int64_t>(i);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

/// Partition a dataset into the subsets sharing a bath outcome.
inline GroupedDataset group_by_outcome(const Dataset& ds) {
    GroupedDataset g;
    g.n_a = ds.n_a;
    g.n_b = ds.n - ds.n_a;
    g.total = ds.records.size();
    for (const auto& rec : ds.records)
        g.groups[rec.b_bits.bits].push_back(AShot{rec.a_bases, rec.a_bits});
    for (const auto& [key, shots] : g.groups)
        g.empirical_p[key] =
            static_cast<double>(shots.size()) / static_cast<double>(g.total);
    return g;
}

// Dataset files are line oriented: a header with the chain geometry and
// seed, then one record per line. Times are written with 17 significant
// digits so the round trip is bit exact. An empty bath outcome is "-".
inline void write_dataset(std::ostream& os, const Dataset& ds) {
    os << "# kdesign-dataset n=" << ds.n << " na=" << ds.n_a << " seed=" << ds.seed << "\n";
    os.precision(17);
    for (const auto& rec : ds.records)
        os << rec.time_us << ' ' << rec.shot_id << ' ' << rec.a_bases << ' '
           << rec.a_bits.to_string() << ' ' << (rec.b_bits.n > 0 ? rec.b_bits.to_string() : "-")
           << '\n';
}

inline Dataset read_dataset(std::istream& is) {
    std::string header;
    std::getline(is, header);
    Dataset ds;
    unsigned long long seed = 0;
    if (std::sscanf(header.c_str(), "# kdesign-dataset n=%d na=%d seed=%llu", &ds.n, &ds.n_a,
                    &seed) != 3)
        throw std::runtime_error("read_dataset: bad header");
    ds.seed = seed;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        MeasurementRecord rec;
        std::string a_bits, b_bits;
        ss >> rec.time_us >> rec.shot_id >> rec.a_bases >> a_bits >> b_bits;
        if (!ss) throw std::runtime_error("read_dataset: bad record line");
        rec.a_bits = SiteConfig::from_string(a_bits);
        rec.b_bits = (b_bits == "-") ? SiteConfig{0, 0} : SiteConfig::from_string(b_bits);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

inline void write_dataset_file(const std::string& path, const Dataset& ds) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_dataset_file: cannot open " + path);
    write_dataset(os, ds);
}

inline Dataset read_dataset_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_dataset_file: cannot open " + path);
    return read_dataset(is);
}

}  // namespace kdesign
