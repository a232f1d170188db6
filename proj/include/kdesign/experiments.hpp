#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdesign/constrained_space.hpp"
#include "kdesign/dynamics.hpp"
#include "kdesign/estimator_crbm.hpp"
#include "kdesign/estimator_mle.hpp"
#include "kdesign/measurement.hpp"
#include "kdesign/metrics.hpp"
#include "kdesign/projected_ensemble.hpp"
#include "kdesign/rng.hpp"

namespace kdesign {

/// Invalid configuration (bad key, unparsable value, violated constraint).
/// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// All knobs of the experiment pipelines, with defaults matching the
/// simulated chain: Omega/2pi = 4.7 MHz, Delta/2pi = 0.9 MHz,
/// C6 = 126 GHz um^6, spacing 3.3 um, N = 10 sites with N_A = 2.
struct ExperimentConfig {
    int n = 10;
    int n_a = 2;
    double omega_mhz = 4.7;
    double delta_mhz = 0.9;
    double c6_ghz_um6 = 126.0;
    double a_um = 3.3;
    std::string c6_convention = "h";  // "h": C6 is an ordinary frequency; "hbar": already angular

    double time_start = 0.0, time_stop = 5.0;
    int time_points = 251;
    double fit_time_start = 0.4, fit_time_stop = 1.4;  // estimator benchmarks
    int fit_time_points = 21;
    double steady_start = 1.5, steady_stop = 5.0;  // steady-state averaging window
    int steady_points = 130;

    int repetitions = 10;
    std::vector<std::size_t> sizes = {8, 16, 32, 57, 64, 128, 256, 512, 1024, 4096, 10000};
    std::size_t size_frequentist = 57;
    std::size_t size_maxlk = 45;
    std::size_t size_crbm = 256;

    int mle_max_iterations = 2000;
    double mle_tolerance = 1e-12;
    double mle_floor = 1e-12;
    double mle_init_step = 0.25;
    double mle_perturbation = 0.01;

    double crbm_learning_rate = 0.1;
    int crbm_epochs = 500;
    int crbm_batch_size = 32;
    int crbm_cd_steps = 10;
    int crbm_hidden = 3;
    bool crbm_exact_negative = false;
    bool skip_crbm = false;

    std::vector<int> scaling_na = {1, 2, 3};
    int scaling_nb_min = 5;  // smaller baths sit outside the power-law regime
    int scaling_n_max = 14;
    std::vector<int> k_values = {1, 2, 3};

    std::uint64_t seed = 1;
    std::string out = "results.csv";
    std::string in;               // input dataset for `estimate`
    std::string method;           // empty = all methods
    double sample_time = 1.0;
    std::size_t sample_size = 1000;
    std::string sample_mode = "random";  // random | z

    RydbergParams physical_params() const {
        return RydbergParams::from_linear_frequencies(omega_mhz, delta_mhz, c6_ghz_um6, a_um,
                                                      c6_convention == "h");
    }

    MleOptions mle_options() const {
        MleOptions o;
        o.max_iterations = mle_max_iterations;
        o.tolerance = mle_tolerance;
        o.floor = mle_floor;
        o.init_step = mle_init_step;
        o.perturbation = mle_perturbation;
        o.seed = seed;
        return o;
    }

    TrainConfig crbm_config() const {
        TrainConfig c;
        c.learning_rate = crbm_learning_rate;
        c.epochs = crbm_epochs;
        c.batch_size = crbm_batch_size;
        c.cd_steps = crbm_cd_steps;
        c.hidden = crbm_hidden;
        c.exact_negative_phase = crbm_exact_negative;
        c.seed = seed;
        return c;
    }

    void validate() const {
        if (n < 2 || n > 20) throw ConfigError("config: n must be in [2, 20]");
        if (n_a < 1 || n_a >= n) throw ConfigError("config: need 1 <= na < n");
        if (a_um <= 0) throw ConfigError("config: a_um must be positive");
        if (omega_mhz <= 0) throw ConfigError("config: omega_mhz must be positive");
        if (c6_convention != "h" && c6_convention != "hbar")
            throw ConfigError("config: c6_convention must be h or hbar");
        if (time_points < 1 || fit_time_points < 1 || steady_points < 1)
            throw ConfigError("config: time grids need at least one point");
        if (repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
        if (sizes.empty()) throw ConfigError("config: sizes must not be empty");
        if (sample_mode != "random" && sample_mode != "z")
            throw ConfigError("config: sample_mode must be random or z");
        if (!method.empty() && method != "frequentist" && method != "maxlk" && method != "crbm")
            throw ConfigError("config: method must be frequentist, maxlk or crbm");
        if (scaling_nb_min < 1 || scaling_n_max > 20)
            throw ConfigError("config: scaling range out of bounds");
        for (int na : scaling_na)
            if (na < 1 || na + scaling_nb_min > scaling_n_max)
                throw ConfigError("config: scaling_na incompatible with scaling_n_max");
        for (int k : k_values)
            if (k < 1 || k > 4) throw ConfigError("config: k_values must lie in [1, 4]");
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
inline std::string join_list(const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_same_v<T, double>)
            s += format_double(xs[i]);
        else
            s += std::to_string(xs[i]);
    }
    return s;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

template <typename T>
inline T parse_number(const std::string& key, const std::string& value) {
    T out{};
    std::istringstream ss(value);
    ss >> out;
    if (!ss || !ss.eof()) throw ConfigError("config: bad value for " + key + ": " + value);
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + value);
}

template <typename T>
inline std::vector<T> parse_list(const std::string& key, const std::string& value) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_number<T>(key, trim(item)));
    if (out.empty()) throw ConfigError("config: empty list for " + key);
    return out;
}

}  // namespace detail

/// Apply one key=value assignment. Unknown keys are rejected so typos fail
/// loudly instead of running with a silently ignored setting.
inline void config_assign(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
    using detail::parse_bool;
    using detail::parse_list;
    using detail::parse_number;
    if (key == "n") cfg.n = parse_number<int>(key, value);
    else if (key == "na") cfg.n_a = parse_number<int>(key, value);
    else if (key == "omega_mhz") cfg.omega_mhz = parse_number<double>(key, value);
    else if (key == "delta_mhz") cfg.delta_mhz = parse_number<double>(key, value);
    else if (key == "c6_ghz_um6") cfg.c6_ghz_um6 = parse_number<double>(key, value);
    else if (key == "a_um") cfg.a_um = parse_number<double>(key, value);
    else if (key == "c6_convention") cfg.c6_convention = value;
    else if (key == "time_start") cfg.time_start = parse_number<double>(key, value);
    else if (key == "time_stop") cfg.time_stop = parse_number<double>(key, value);
    else if (key == "time_points") cfg.time_points = parse_number<int>(key, value);
    else if (key == "fit_time_start") cfg.fit_time_start = parse_number<double>(key, value);
    else if (key == "fit_time_stop") cfg.fit_time_stop = parse_number<double>(key, value);
    else if (key == "fit_time_points") cfg.fit_time_points = parse_number<int>(key, value);
    else if (key == "steady_start") cfg.steady_start = parse_number<double>(key, value);
    else if (key == "steady_stop") cfg.steady_stop = parse_number<double>(key, value);
    else if (key == "steady_points") cfg.steady_points = parse_number<int>(key, value);
    else if (key == "repetitions") cfg.repetitions = parse_number<int>(key, value);
    else if (key == "sizes") cfg.sizes = parse_list<std::size_t>(key, value);
    else if (key == "size_frequentist") cfg.size_frequentist = parse_number<std::size_t>(key, value);
    else if (key == "size_maxlk") cfg.size_maxlk = parse_number<std::size_t>(key, value);
    else if (key == "size_crbm") cfg.size_crbm = parse_number<std::size_t>(key, value);
    else if (key == "mle_max_iterations") cfg.mle_max_iterations = parse_number<int>(key, value);
    else if (key == "mle_tolerance") cfg.mle_tolerance = parse_number<double>(key, value);
    else if (key == "mle_floor") cfg.mle_floor = parse_number<double>(key, value);
    else if (key == "mle_init_step") cfg.mle_init_step = parse_number<double>(key, value);
    else if (key == "mle_perturbation") cfg.mle_perturbation = parse_number<double>(key, value);
    else if (key == "crbm_learning_rate") cfg.crbm_learning_rate = parse_number<double>(key, value);
    else if (key == "crbm_epochs") cfg.crbm_epochs = parse_number<int>(key, value);
    else if (key == "crbm_batch_size") cfg.crbm_batch_size = parse_number<int>(key, value);
    else if (key == "crbm_cd_steps") cfg.crbm_cd_steps = parse_number<int>(key, value);
    else if (key == "crbm_hidden") cfg.crbm_hidden = parse_number<int>(key, value);
    else if (key == "crbm_exact_negative") cfg.crbm_exact_negative = parse_bool(key, value);
    else if (key == "skip_crbm") cfg.skip_crbm = parse_bool(key, value);
    else if (key == "scaling_na") cfg.scaling_na = parse_list<int>(key, value);
    else if (key == "scaling_nb_min") cfg.scaling_nb_min = parse_number<int>(key, value);
    else if (key == "scaling_n_max") cfg.scaling_n_max = parse_number<int>(key, value);
    else if (key == "k_values") cfg.k_values = parse_list<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "in") cfg.in = value;
    else if (key == "method") cfg.method = value;
    else if (key == "sample_time") cfg.sample_time = parse_number<double>(key, value);
    else if (key == "sample_size") cfg.sample_size = parse_number<std::size_t>(key, value);
    else if (key == "sample_mode") cfg.sample_mode = value;
    else throw ConfigError("config: unknown key: " + key);
}

/// Read a plain-text key=value config file. '#' starts a comment; blank
/// lines are ignored.
inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        config_assign(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

/// Canonical serialization of every field, used for the config hash embedded
/// in result tables (replays with a different configuration are detectable).
inline std::string canonical_config(const ExperimentConfig& c) {
    using detail::format_double;
    using detail::join_list;
    std::ostringstream os;
    os << "n=" << c.n << "\nna=" << c.n_a << "\nomega_mhz=" << format_double(c.omega_mhz)
       << "\ndelta_mhz=" << format_double(c.delta_mhz)
       << "\nc6_ghz_um6=" << format_double(c.c6_ghz_um6) << "\na_um=" << format_double(c.a_um)
       << "\nc6_convention=" << c.c6_convention
       << "\ntime_start=" << format_double(c.time_start)
       << "\ntime_stop=" << format_double(c.time_stop) << "\ntime_points=" << c.time_points
       << "\nfit_time_start=" << format_double(c.fit_time_start)
       << "\nfit_time_stop=" << format_double(c.fit_time_stop)
       << "\nfit_time_points=" << c.fit_time_points
       << "\nsteady_start=" << format_double(c.steady_start)
       << "\nsteady_stop=" << format_double(c.steady_stop)
       << "\nsteady_points=" << c.steady_points << "\nrepetitions=" << c.repetitions
       << "\nsizes=" << join_list(c.sizes) << "\nsize_frequentist=" << c.size_frequentist
       << "\nsize_maxlk=" << c.size_maxlk << "\nsize_crbm=" << c.size_crbm
       << "\nmle_max_iterations=" << c.mle_max_iterations
       << "\nmle_tolerance=" << format_double(c.mle_tolerance)
       << "\nmle_floor=" << format_double(c.mle_floor)
       << "\nmle_init_step=" << format_double(c.mle_init_step)
       << "\nmle_perturbation=" << format_double(c.mle_perturbation)
       << "\ncrbm_learning_rate=" << format_double(c.crbm_learning_rate)
       << "\ncrbm_epochs=" << c.crbm_epochs << "\ncrbm_batch_size=" << c.crbm_batch_size
       << "\ncrbm_cd_steps=" << c.crbm_cd_steps << "\ncrbm_hidden=" << c.crbm_hidden
       << "\ncrbm_exact_negative=" << (c.crbm_exact_negative ? "true" : "false")
       << "\nskip_crbm=" << (c.skip_crbm ? "true" : "false")
       << "\nscaling_na=" << join_list(c.scaling_na)
       << "\nscaling_nb_min=" << c.scaling_nb_min << "\nscaling_n_max=" << c.scaling_n_max
       << "\nk_values=" << join_list(c.k_values) << "\nseed=" << c.seed
       << "\nmethod=" << c.method << "\nsample_time=" << format_double(c.sample_time)
       << "\nsample_size=" << c.sample_size << "\nsample_mode=" << c.sample_mode << "\n";
    return os.str();
}

inline std::string config_hash(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::hex << detail::fnv1a64(canonical_config(c));
    return os.str();
}

/// Column-labelled rows plus a metadata line. Rows are keyed by the leading
/// columns (time/size/repetition), so assembly order never matters; the CSV
/// is `#<json metadata>` followed by a header line and the rows.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::string meta_json;

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns.size())
            throw std::logic_error("ResultTable: row width mismatch");
        rows.push_back(std::move(cells));
    }

    void write_csv(std::ostream& os) const {
        os << '#' << meta_json << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i)
            os << columns[i] << (i + 1 < columns.size() ? ',' : '\n');
        for (const auto& row : rows)
            for (std::size_t i = 0; i < row.size(); ++i)
                os << row[i] << (i + 1 < row.size() ? ',' : '\n');
    }

    std::string to_string() const {
        std::ostringstream os;
        write_csv(os);
        return os.str();
    }
};

namespace detail {

inline std::string table_metadata(const ExperimentConfig& cfg, const std::string& command) {
    nlohmann::ordered_json meta;
    meta["command"] = command;
    meta["config_hash"] = config_hash(cfg);
    meta["seed"] = cfg.seed;
    return meta.dump();
}

inline std::vector<double> linspace(double start, double stop, int points) {
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        ts.push_back(start);
        return ts;
    }
    for (int i = 0; i < points; ++i)
        ts.push_back(start + (stop - start) * static_cast<double>(i) /
                                 static_cast<double>(points - 1));
    return ts;
}

/// Diagonalized chain shared by all pipelines.
struct System {
    ConstrainedSpace space;
    Propagator prop;
    StateVector psi0;
};

inline System make_system(const ExperimentConfig& cfg, int n, int n_a) {
    ConstrainedSpace space(n, n_a);
    Propagator prop = diagonalize(build_hamiltonian(cfg.physical_params(), space));
    StateVector psi0 = initial_ground_state(space);
    return System{std::move(space), std::move(prop), std::move(psi0)};
}

// Stream tags for the per-task seed derivation.
enum StreamTag : std::uint64_t { kSample = 1, kMre = 2, kTrdist = 3 };

inline std::vector<std::string> selected_methods(const ExperimentConfig& cfg) {
    std::vector<std::string> methods{"frequentist", "maxlk"};
    if (!cfg.skip_crbm) methods.push_back("crbm");
    if (!cfg.method.empty()) {
        if (cfg.method == "crbm" && cfg.skip_crbm)
            throw ConfigError("config: method=crbm conflicts with skip_crbm=true");
        methods = {cfg.method};
    }
    return methods;
}

/// Draw one dataset and estimate its ensemble with the named method.
inline Ensemble sampled_estimate(const System& sys, const ExperimentConfig& cfg,
                                 const std::string& method, std::size_t size,
                                 const StateVector& psi, double t, std::mt19937_64& rng) {
    const SamplingMode mode =
        method == "frequentist" ? SamplingMode::z_only : SamplingMode::random_basis;
    const std::uint64_t fit_seed = rng();
    const Dataset ds = draw_dataset(sys.space, psi, cfg.n_a, size, rng, mode, t);
    const GroupedDataset g = group_by_outcome(ds);
    if (method == "frequentist")
        return estimate_ensemble(g, EstimatorMethod::frequentist);
    if (method == "maxlk") {
        MleOptions opts = cfg.mle_options();
        opts.seed = fit_seed;
        return estimate_ensemble(g, EstimatorMethod::maxlk, opts);
    }
    TrainConfig tc = cfg.crbm_config();
    tc.seed = fit_seed;
    return crbm_estimate_ensemble(g, tc);
}

}  // namespace detail

/// Time traces of the ground-state marginal p(z_A = 0..0) and the rescaled
/// conditional moments for k = 2..4 (the rescaled values approach k! once the
/// projected ensemble looks Haar).
inline ResultTable cmd_dynamics(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sys = detail::make_system(cfg, cfg.n, cfg.n_a);
    const auto times = detail::linspace(cfg.time_start, cfg.time_stop, cfg.time_points);
    const int dim_a = SubsystemSpace(cfg.n_a).dim_constrained();

    ResultTable table;
    table.meta_json = detail::table_metadata(cfg, "dynamics");
    table.columns = {"t_us", "p00", "m2_rescaled", "m3_rescaled", "m4_rescaled"};
    for (double t : times) {
        const StateVector psi = evolve(sys.prop, sys.psi0, t);
        const Ensemble e = exact_ensemble(sys.space, psi, cfg.n_a);
        double moments[5] = {0, 0, 0, 0, 0};
        for (const auto& entry : e.entries) {
            const double q = std::norm(entry.state[0]);
            double qk = q;
            for (int k = 1; k <= 4; ++k, qk *= q) moments[k] += entry.prob * qk;
        }
        std::vector<std::string> row{detail::format_double(t),
                                     detail::format_double(moments[1])};
        double rescale = 1.0;
        for (int k = 2; k <= 4; ++k) {
            rescale = 1.0;
            for (int j = 0; j < k; ++j) rescale *= dim_a + j;
            row.push_back(detail::format_double(moments[k] * rescale));
        }
        table.add_row(std::move(row));
    }
    return table;
}

/// Mean relative error of each estimator's delta_2 against the exact value,
/// across the dataset-size ladder, averaged over the benchmark time grid and
/// the configured repetitions.
inline ResultTable cmd_mre_vs_size(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sys = detail::make_system(cfg, cfg.n, cfg.n_a);
    const auto times =
        detail::linspace(cfg.fit_time_start, cfg.fit_time_stop, cfg.fit_time_points);
    const auto methods = detail::selected_methods(cfg);
    constexpr int k = 2;

    std::vector<StateVector> states;
    Eigen::VectorXd exact(static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        states.push_back(evolve(sys.prop, sys.psi0, times[i]));
        exact[static_cast<Eigen::Index>(i)] =
            delta_k(exact_ensemble(sys.space, states.back(), cfg.n_a), k).value;
    }

    ResultTable table;
    table.meta_json = detail::table_metadata(cfg, "mre");
    table.columns = {"size", "method", "k", "mre_mean", "mre_std"};
    for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            Eigen::MatrixXd estimates(cfg.repetitions, static_cast<Eigen::Index>(times.size()));
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                for (std::size_t ti = 0; ti < times.size(); ++ti) {
                    auto rng = derive_stream(
                        cfg.seed, {detail::kMre, si, mi, static_cast<std::uint64_t>(rep), ti});
                    const Ensemble est = detail::sampled_estimate(
                        sys, cfg, methods[mi], cfg.sizes[si], states[ti], times[ti], rng);
                    estimates(rep, static_cast<Eigen::Index>(ti)) = delta_k(est, k).value;
                }
            }
            const MreResult mre = mean_relative_error(estimates, exact);
            table.add_row({std::to_string(cfg.sizes[si]), methods[mi], std::to_string(k),
                           detail::format_double(mre.mean), detail::format_double(mre.stddev)});
        }
    }
    return table;
}

/// delta_2 and delta_3 against time: the exact values plus each estimator's
/// mean and standard deviation over the repetitions, using the per-method
/// operating-point dataset sizes.
inline ResultTable cmd_trdist_vs_time(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sys = detail::make_system(cfg, cfg.n, cfg.n_a);
    const auto times =
        detail::linspace(cfg.fit_time_start, cfg.fit_time_stop, cfg.fit_time_points);
    const auto methods = detail::selected_methods(cfg);
    const auto size_of = [&cfg](const std::string& m) {
        if (m == "frequentist") return cfg.size_frequentist;
        if (m == "maxlk") return cfg.size_maxlk;
        return cfg.size_crbm;
    };

    ResultTable table;
    table.meta_json = detail::table_metadata(cfg, "trdist");
    table.columns = {"t_us", "exact_k2", "exact_k3"};
    for (const auto& m : methods)
        for (int k : {2, 3}) {
            table.columns.push_back(m + "_k" + std::to_string(k) + "_mean");
            table.columns.push_back(m + "_k" + std::to_string(k) + "_std");
        }

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const StateVector psi = evolve(sys.prop, sys.psi0, times[ti]);
        const Ensemble e = exact_ensemble(sys.space, psi, cfg.n_a);
        std::vector<std::string> row{detail::format_double(times[ti]),
                                     detail::format_double(delta_k(e, 2).value),
                                     detail::format_double(delta_k(e, 3).value)};
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            Eigen::MatrixXd vals(cfg.repetitions, 2);  // columns: k=2, k=3
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                auto rng = derive_stream(
                    cfg.seed, {detail::kTrdist, mi, static_cast<std::uint64_t>(rep), ti});
                const Ensemble est = detail::sampled_estimate(
                    sys, cfg, methods[mi], size_of(methods[mi]), psi, times[ti], rng);
                vals(rep, 0) = delta_k(est, 2).value;
                vals(rep, 1) = delta_k(est, 3).value;
            }
            for (int col = 0; col < 2; ++col) {
                const double mean = vals.col(col).mean();
                const double sd =
                    cfg.repetitions > 1
                        ? std::sqrt((vals.col(col).array() - mean).square().sum() /
                                    (cfg.repetitions - 1))
                        : 0.0;
                row.push_back(detail::format_double(mean));
                row.push_back(detail::format_double(sd));
            }
        }
        table.add_row(std::move(row));
    }
    return table;
}

/// Steady-state average of delta_k against bath size for each configured
/// subsystem size, with the fitted power-law exponent gamma_k attached to
/// every row of its (n_a, k) series.
inline ResultTable cmd_scaling(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto times = detail::linspace(cfg.steady_start, cfg.steady_stop, cfg.steady_points);

    ResultTable table;
    table.meta_json = detail::table_metadata(cfg, "scaling");
    table.columns = {"na", "nb", "k", "delta_mean", "delta_std", "gamma_k", "r_squared"};

    for (int n_a : cfg.scaling_na) {
        std::vector<int> nbs;
        for (int nb = cfg.scaling_nb_min; n_a + nb <= cfg.scaling_n_max; ++nb) nbs.push_back(nb);
        // mean/std per (k, nb)
        std::map<int, std::vector<std::pair<double, double>>> stats;
        for (int nb : nbs) {
            const auto sys = detail::make_system(cfg, n_a + nb, n_a);
            std::map<int, std::vector<double>> series;
            for (double t : times) {
                const StateVector psi = evolve(sys.prop, sys.psi0, t);
                const Ensemble e = exact_ensemble(sys.space, psi, n_a);
                for (int k : cfg.k_values) series[k].push_back(delta_k(e, k).value);
            }
            for (int k : cfg.k_values) {
                const auto& xs = series[k];
                double mean = 0;
                for (double x : xs) mean += x;
                mean /= static_cast<double>(xs.size());
                double var = 0;
                for (double x : xs) var += (x - mean) * (x - mean);
                const double sd = xs.size() > 1
                                      ? std::sqrt(var / static_cast<double>(xs.size() - 1))
                                      : 0.0;
                stats[k].push_back({mean, sd});
            }
        }
        for (int k : cfg.k_values) {
            std::vector<double> nb_d(nbs.begin(), nbs.end());
            std::vector<double> means;
            for (const auto& [m, s] : stats[k]) means.push_back(m);
            const ScalingFit fit = fit_scaling(nb_d, means);
            for (std::size_t i = 0; i < nbs.size(); ++i)
                table.add_row({std::to_string(n_a), std::to_string(nbs[i]), std::to_string(k),
                               detail::format_double(stats[k][i].first),
                               detail::format_double(stats[k][i].second),
                               detail::format_double(fit.gamma_k),
                               detail::format_double(fit.r_squared)});
        }
    }
    return table;
}

/// Draw one dataset from |Psi(sample_time)> and write it to cfg.out.
inline Dataset cmd_sample(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sys = detail::make_system(cfg, cfg.n, cfg.n_a);
    const StateVector psi = evolve(sys.prop, sys.psi0, cfg.sample_time);
    auto rng = derive_stream(cfg.seed, {detail::kSample});
    const SamplingMode mode =
        cfg.sample_mode == "z" ? SamplingMode::z_only : SamplingMode::random_basis;
    Dataset ds = draw_dataset(sys.space, psi, cfg.n_a, cfg.sample_size, rng, mode,
                              cfg.sample_time);
    ds.seed = cfg.seed;
    write_dataset_file(cfg.out, ds);
    return ds;
}

/// Read a dataset file, fit one state per bath outcome with the configured
/// method and write the estimated ensemble to cfg.out.
inline Ensemble cmd_estimate(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.in.empty()) throw ConfigError("estimate: missing input dataset (set in=...)");
    const std::string method = cfg.method.empty() ? "maxlk" : cfg.method;
    const Dataset ds = read_dataset_file(cfg.in);
    const GroupedDataset g = group_by_outcome(ds);
    Ensemble est;
    if (method == "frequentist")
        est = estimate_ensemble(g, EstimatorMethod::frequentist);
    else if (method == "maxlk")
        est = estimate_ensemble(g, EstimatorMethod::maxlk, cfg.mle_options());
    else
        est = crbm_estimate_ensemble(g, cfg.crbm_config());
    std::ofstream os(cfg.out);
    if (!os) throw std::runtime_error("estimate: cannot open " + cfg.out);
    write_ensemble(os, est);
    return est;
}

inline void write_table_file(const ResultTable& table, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file " + path);
    table.write_csv(os);
}

}  // namespace kdesign
