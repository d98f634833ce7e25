#pragma once

#include "wbce/analysis.hpp"
#include "wbce/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace wbce {

// ---------------------------------------------------------------- metrics

inline double per_symbol_error(const cvec& y, const cvec& y_hat, long m_symbols, double step_s)
{
    if (y.size() != y_hat.size()) {
        throw std::invalid_argument("per_symbol_error: length mismatch");
    }
    return (y_hat - y).squaredNorm() * step_s / static_cast<double>(m_symbols);
}

inline double normalized_residual(const cvec& ref, const cmat& op, const cvec& theta_hat, const char* who)
{
    if (op.rows() != ref.size() || op.cols() != theta_hat.size()) {
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    }
    const double n = ref.squaredNorm();
    if (!(n > 0.0)) {
        throw std::invalid_argument(std::string(who) + ": reference signal has zero norm");
    }
    return (ref - op * theta_hat).squaredNorm() / n;
}

inline double training_error(const cvec& z, const cmat& A, const cvec& theta_hat)
{
    return normalized_residual(z, A, theta_hat, "training_error");
}

inline double data_error(const cvec& y, const cmat& B, const cvec& theta_hat)
{
    return normalized_residual(y, B, theta_hat, "data_error");
}

// Fits a model on stream[start, end) and predicts stream[end].
using Predictor = std::function<cplx(const cvec& stream, long start, long end)>;

struct PredictionResult {
    std::vector<double> squared_errors;
    std::vector<cplx> predictions;
    double aggregate = 0.0;
};

/*
 * One-step-ahead prediction over targets first..last (0-based, inclusive),
 * each fitted on the `window` samples before it.
 */
inline PredictionResult prediction_error(const cvec& stream, long window, long first, long last,
                                         const Predictor& model_builder)
{
    if (window < 1) {
        throw std::invalid_argument("prediction_error: window too small");
    }
    if (stream.size() <= window) {
        throw std::invalid_argument("prediction_error: stream must be longer than the window");
    }
    if (first < window || last >= stream.size() || last < first) {
        throw std::invalid_argument("prediction_error: target range must follow a full window and lie in the stream");
    }
    PredictionResult r;
    double num = 0.0;
    double den = 0.0;
    for (long i = first; i <= last; ++i) {
        const cplx p = model_builder(stream, i - window, i);
        const double e = std::norm(stream[i] - p);
        r.predictions.push_back(p);
        r.squared_errors.push_back(e);
        num += e;
        den += std::norm(stream[i]);
    }
    if (!(den > 0.0)) {
        throw std::invalid_argument("prediction_error: target samples have zero energy");
    }
    r.aggregate = num / den;
    return r;
}

// Least-squares fit of time-invariant atoms (columns sampled on the stream grid).
inline Predictor lti_predictor(const cmat& atoms)
{
    return [atoms](const cvec& stream, long start, long end) -> cplx {
        const long w = end - start;
        const cmat Aw = atoms.middleRows(start, w);
        const cvec zw = stream.segment(start, w);
        Eigen::CompleteOrthogonalDecomposition<cmat> cod(Aw);
        const cvec c = cod.solve(zw);
        return (atoms.row(end) * c)(0);
    };
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<double, long, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw std::out_of_range("Table: no column " + name);
    }
    double num(std::size_t row, const std::string& name) const
    {
        const Cell& c = rows.at(row).at(column(name));
        if (const auto* d = std::get_if<double>(&c)) {
            return *d;
        }
        if (const auto* l = std::get_if<long>(&c)) {
            return static_cast<double>(*l);
        }
        throw std::invalid_argument("Table: column " + name + " is not numeric");
    }
    std::string str(std::size_t row, const std::string& name) const
    {
        return std::get<std::string>(rows.at(row).at(column(name)));
    }
};

inline std::string format_cell(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c)) {
        if (std::isinf(*d)) {
            return *d > 0 ? "inf" : "-inf";
        }
        if (std::isnan(*d)) {
            return "nan";
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", *d);
        return buf;
    }
    if (const auto* l = std::get_if<long>(&c)) {
        return std::to_string(*l);
    }
    return std::get<std::string>(c);
}

inline void write_csv(std::ostream& os, const Table& t)
{
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        os << (i ? "," : "") << t.header[i];
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << format_cell(row[i]);
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------- config

struct PathConfig {
    double gamma_s = 0.0;
    double a = 0.0;
    double theta_re = 1.0;
    double theta_im = 0.0;
};

struct ExperimentConfig {
    std::string experiment = "lti";
    double carrier_hz = 18000.0;
    double symbol_rate_hz = 24000.0;
    int oversampling = 3;
    long n_train = 100;
    long n_data = 100;
    double rolloff = 0.0;
    int truncation_symbols = 128;
    // Negative means "use truncation_symbols".
    double margin_symbols = -1.0;
    std::vector<PathConfig> paths{PathConfig{0.007, 0.0, 1.0, 0.0}};

    std::vector<double> delta_gamma_over_T;
    std::vector<double> delta_a;
    std::vector<long> offset_divisors{2};

    double gamma_min_s = 0.010;
    double gamma_max_s = 0.015;
    double a_max = 2.5e-3;
    double grid_delta_gamma_over_T = 0.5;
    double grid_delta_a = 5e-4;
    long n_paths = 3;
    long column_limit = 2000;

    std::vector<double> snr_db{std::numeric_limits<double>::infinity()};
    long trials = 1;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string offset_policy = "half-grid";
    double b_const = default_b;
    bool strict_assumptions = false;

    long omp_max_iters = 40;
    std::vector<double> bp_lambdas;
    long bp_max_iters = 300;
    double bp_tol = 1e-7;
    std::vector<double> fbmp_p;
    long fbmp_breadth = 5;
    double fbmp_gain_var = 0.0;
    double noiseless_floor_db = 60.0;

    std::vector<double> fc_T;
    double e_wideband_target = 0.0125;

    double symbol_period_s() const { return 1.0 / symbol_rate_hz; }
    double fc_T_product() const { return carrier_hz / symbol_rate_hz; }
    PulseSpec pulse() const
    {
        PulseSpec s;
        s.symbol_period_s = symbol_period_s();
        s.rolloff = rolloff;
        s.truncation_half_width_symbols = truncation_symbols;
        s.oversampling = oversampling;
        return s;
    }
    double margin() const
    {
        if (margin_symbols >= 0.0) {
            return margin_symbols;
        }
        return truncation_symbols > 0 ? static_cast<double>(truncation_symbols) : 16.0;
    }
};

inline std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    }
    return v;
}

inline ExperimentConfig default_config(const std::string& kind)
{
    ExperimentConfig c;
    c.experiment = kind;
    if (kind == "lti") {
        c.carrier_hz = 18000.0;
        c.symbol_rate_hz = 24000.0;
        c.oversampling = 3;
        c.n_train = c.n_data = 100;
        c.paths = {PathConfig{0.007, 0.0, 1.0, 0.0}};
        c.delta_gamma_over_T = linspace(0.0, 0.5, 11);
        c.offset_divisors = {2, 3, 4, 5};
        c.trials = 30;
    } else if (kind == "wideband-sweep" || kind == "doppler-sweep") {
        c.carrier_hz = 10000.0;
        c.symbol_rate_hz = 10000.0;
        c.oversampling = 3;
        c.n_train = c.n_data = 300;
        c.paths = {PathConfig{0.0, -0.001, 1.0, 0.0}};
        c.delta_gamma_over_T = linspace(0.0, 0.25, 8);
        c.delta_a = linspace(0.0, 1.7e-3, 8);
        c.trials = 10;
    } else if (kind == "solver-comparison") {
        c.carrier_hz = 10000.0;
        c.symbol_rate_hz = 10000.0;
        c.oversampling = 3;
        c.n_train = c.n_data = 200;
        c.paths.clear();
        c.margin_symbols = 8.0;
        c.gamma_min_s = 0.010;
        c.gamma_max_s = 0.015;
        c.a_max = 2.5e-3;
        c.grid_delta_gamma_over_T = 0.5;
        c.grid_delta_a = 5e-4;
        c.n_paths = 3;
        c.column_limit = 2000;
        c.snr_db = {std::numeric_limits<double>::infinity(), 1.0, 3.0, 10.0};
        c.trials = 10;
        c.omp_max_iters = 40;
        for (int k = 0; k < 9; ++k) {
            c.bp_lambdas.push_back(0.05 * std::pow(2.0, k));
        }
        c.fbmp_p = {0.001, 0.002, 0.004, 0.008, 0.016};
        c.fbmp_breadth = 5;
    } else if (kind == "dopp-vs-scale") {
        c.n_train = c.n_data = 100;
        c.paths = {PathConfig{0.0, 0.0008, 1.0, 0.0}};
        c.fc_T = {1, 2, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
        c.e_wideband_target = 0.0125;
    } else {
        throw std::invalid_argument("unknown experiment kind: " + kind);
    }
    return c;
}

inline void validate(const ExperimentConfig& c)
{
    if (!(c.carrier_hz > 0.0) || !(c.symbol_rate_hz > 0.0)) {
        throw std::invalid_argument("config: carrier_hz and symbol_rate_hz must be positive");
    }
    if (c.oversampling < 1) {
        throw std::invalid_argument("config: oversampling must be >= 1");
    }
    if (c.trials < 1) {
        throw std::invalid_argument("config: trials must be >= 1");
    }
    if (c.n_train < 1 || c.n_data < 1) {
        throw std::invalid_argument("config: n_train and n_data must be >= 1");
    }
    if (c.offset_policy != "half-grid" && c.offset_policy != "nearest-grid") {
        throw std::invalid_argument("config: offset_policy must be half-grid or nearest-grid");
    }
    if (c.threads < 1) {
        throw std::invalid_argument("config: threads must be >= 1");
    }
}

// ---------------------------------------------------------------- orchestration

// Runs body(i) for i in [0, n) on up to `threads` workers; results are indexed, not ordered by completion.
inline void parallel_for(long n, int threads, const std::function<void(long)>& body)
{
    const int workers = static_cast<int>(std::max(1L, std::min<long>(threads, n)));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (long i = w; i < n; i += workers) {
                    body(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

inline std::uint64_t trial_seed(const ExperimentConfig& c, long trial)
{
    return c.seed + static_cast<std::uint64_t>(trial);
}

enum Stream : std::uint64_t { pilot_stream = 0, data_stream = 1, channel_stream = 2, noise_stream = 3 };

inline cvec single_path(const ChannelPath& p, const SymbolSequence& sym, const PulseShape& shape, double fc_hz,
                        const SampleGrid& grid, ModelKind kind)
{
    cvec out = cvec::Zero(grid.length);
    if (kind == ModelKind::wideband) {
        accumulate_wideband(out, p, sym, shape, fc_hz, grid);
    } else {
        accumulate_narrowband(out, p, sym, shape, fc_hz, grid);
    }
    return out;
}

// Per-symbol error of one path estimated at (gamma_hat, a_hat) with the projected gain.
inline double single_path_trial_error(const ChannelPath& truth, double gamma_hat, double a_hat,
                                      const SymbolSequence& b, const SymbolSequence& c, const cvec& s, const cvec& d,
                                      const PulseShape& shape, double fc_hz, const SampleGrid& grid, ModelKind kind)
{
    const ChannelPath est{gamma_hat, a_hat, {1.0, 0.0}};
    const cvec s_hat = single_path(est, b, shape, fc_hz, grid, kind);
    const cvec d_hat = single_path(est, c, shape, fc_hz, grid, kind);
    const double step = grid.step_s;
    const cplx theta_hat = analytic_gain_estimate(s, s_hat, truth.theta, static_cast<long>(b.size()), step);
    return per_symbol_error(truth.theta * d, theta_hat * d_hat, static_cast<long>(c.size()), step);
}

inline Table run_lti_experiment(const ExperimentConfig& cfg)
{
    validate(cfg);
    if (cfg.paths.size() != 1) {
        throw std::invalid_argument("lti: exactly one path required");
    }
    const PulseSpec spec = cfg.pulse();
    const double T = spec.symbol_period_s;
    for (double dg : cfg.delta_gamma_over_T) {
        if (dg < 0.0 || dg > 0.5 + 1e-12) {
            throw std::invalid_argument("lti: delta_gamma_over_T must lie in [0, 0.5]");
        }
    }
    for (long k : cfg.offset_divisors) {
        if (k < 1) {
            throw std::invalid_argument("lti: offset divisors must be >= 1");
        }
    }
    ChannelPath truth{cfg.paths[0].gamma_s, 0.0, {cfg.paths[0].theta_re, cfg.paths[0].theta_im}};
    const PulseShape shape(spec);
    const SampleGrid grid = covering_grid(spec, static_cast<std::size_t>(std::max(cfg.n_train, cfg.n_data)),
                                          truth.gamma_s, truth.gamma_s + T / 2.0, 0.0, cfg.margin());
    const std::size_t nd = cfg.delta_gamma_over_T.size();
    const std::size_t nk = cfg.offset_divisors.size();
    std::vector<std::vector<double>> err(static_cast<std::size_t>(cfg.trials), std::vector<double>(nd * nk));
    parallel_for(cfg.trials, cfg.threads, [&](long t) {
        const std::uint64_t s0 = trial_seed(cfg, t);
        const auto b = generate_qpsk(mix_seed(s0, pilot_stream), static_cast<std::size_t>(cfg.n_train));
        const auto c = generate_qpsk(mix_seed(s0, data_stream), static_cast<std::size_t>(cfg.n_data));
        const cvec s = single_path(truth, b, shape, cfg.carrier_hz, grid, ModelKind::wideband);
        const cvec d = single_path(truth, c, shape, cfg.carrier_hz, grid, ModelKind::wideband);
        for (std::size_t i = 0; i < nd; ++i) {
            for (std::size_t j = 0; j < nk; ++j) {
                const double g_hat = truth.gamma_s + cfg.delta_gamma_over_T[i] * T / static_cast<double>(cfg.offset_divisors[j]);
                err[static_cast<std::size_t>(t)][i * nk + j] = single_path_trial_error(
                    truth, g_hat, 0.0, b, c, s, d, shape, cfg.carrier_hz, grid, ModelKind::wideband);
            }
        }
    });
    Table tab;
    tab.header = {"delta_gamma_over_T", "offset_divisor", "mean_error", "bound"};
    for (std::size_t i = 0; i < nd; ++i) {
        for (std::size_t j = 0; j < nk; ++j) {
            double m = 0.0;
            for (long t = 0; t < cfg.trials; ++t) {
                m += err[static_cast<std::size_t>(t)][i * nk + j];
            }
            m /= static_cast<double>(cfg.trials);
            const double dg = cfg.delta_gamma_over_T[i];
            tab.rows.push_back({dg, cfg.offset_divisors[j], m, lti_error_bound(dg * T, cfg.n_train, spec)});
        }
    }
    return tab;
}

inline BoundInputs sweep_bound_inputs(const ExperimentConfig& cfg, double dg_over_T, double da)
{
    BoundInputs in;
    in.m_symbols = cfg.n_data;
    in.delta_gamma_s = dg_over_T * cfg.symbol_period_s();
    in.delta_a = da;
    in.fc_T = cfg.fc_T_product();
    in.paths.clear();
    for (const auto& p : cfg.paths) {
        in.paths.push_back(PathWeight{p.theta_re * p.theta_re + p.theta_im * p.theta_im, p.a});
    }
    in.b_const = cfg.b_const;
    in.symbol_period_s = cfg.symbol_period_s();
    return in;
}

inline double round_to_lattice(double v, double step)
{
    if (step <= 0.0) {
        return v;
    }
    return std::round(v / step) * step;
}

// Wideband truth, estimate under `kind`; one row per (delta_gamma, delta_a) cell.
inline Table run_grid_sweep(const ExperimentConfig& cfg, ModelKind kind)
{
    validate(cfg);
    if (cfg.paths.size() != 1) {
        throw std::invalid_argument("grid sweep: exactly one path required");
    }
    if (cfg.n_train != cfg.n_data) {
        throw std::invalid_argument("grid sweep: the bounds assume n_train == n_data");
    }
    const PulseSpec spec = cfg.pulse();
    const double T = spec.symbol_period_s;
    const ChannelPath truth{cfg.paths[0].gamma_s, cfg.paths[0].a, {cfg.paths[0].theta_re, cfg.paths[0].theta_im}};
    validate(truth);
    const bool half = cfg.offset_policy == "half-grid";

    struct CellSpec {
        double dg;
        double da;
        double g_hat;
        double a_hat;
    };
    std::vector<CellSpec> cells;
    double g_lo = truth.gamma_s;
    double g_hi = truth.gamma_s;
    double a_max = std::abs(truth.a);
    for (double dg : cfg.delta_gamma_over_T) {
        for (double da : cfg.delta_a) {
            CellSpec c{dg, da, 0.0, 0.0};
            if (half) {
                c.g_hat = truth.gamma_s + dg * T / 2.0;
                c.a_hat = truth.a + da / 2.0;
            } else {
                c.g_hat = round_to_lattice(truth.gamma_s, dg * T);
                c.a_hat = round_to_lattice(truth.a, da);
            }
            g_lo = std::min(g_lo, c.g_hat);
            g_hi = std::max(g_hi, c.g_hat);
            a_max = std::max(a_max, std::abs(c.a_hat));
            cells.push_back(c);
        }
    }
    const PulseShape shape(spec);
    const SampleGrid grid = covering_grid(spec, static_cast<std::size_t>(cfg.n_data), g_lo, g_hi, a_max, cfg.margin());
    std::vector<std::vector<double>> err(static_cast<std::size_t>(cfg.trials), std::vector<double>(cells.size()));
    parallel_for(cfg.trials, cfg.threads, [&](long t) {
        const std::uint64_t s0 = trial_seed(cfg, t);
        const auto b = generate_qpsk(mix_seed(s0, pilot_stream), static_cast<std::size_t>(cfg.n_train));
        const auto c = generate_qpsk(mix_seed(s0, data_stream), static_cast<std::size_t>(cfg.n_data));
        const cvec s = single_path(truth, b, shape, cfg.carrier_hz, grid, ModelKind::wideband);
        const cvec d = single_path(truth, c, shape, cfg.carrier_hz, grid, ModelKind::wideband);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            err[static_cast<std::size_t>(t)][i] = single_path_trial_error(truth, cells[i].g_hat, cells[i].a_hat, b, c, s,
                                                                          d, shape, cfg.carrier_hz, grid, kind);
        }
    });
    Table tab;
    tab.header = {"delta_gamma_over_T", "delta_a", "mean_error", "bound", "assumptions_ok"};
    for (std::size_t i = 0; i < cells.size(); ++i) {
        double m = 0.0;
        for (long t = 0; t < cfg.trials; ++t) {
            m += err[static_cast<std::size_t>(t)][i];
        }
        m /= static_cast<double>(cfg.trials);
        const BoundInputs in = sweep_bound_inputs(cfg, cells[i].dg, cells[i].da);
        const auto chk = check_bound_assumptions(in, kind);
        const double bound = kind == ModelKind::wideband ? wideband_error_bound(in, cfg.strict_assumptions)
                                                         : doppler_error_bound(in, cfg.strict_assumptions);
        tab.rows.push_back({cells[i].dg, cells[i].da, m, bound, static_cast<long>(chk.ok() ? 1 : 0)});
    }
    return tab;
}

inline Table run_wideband_grid_sweep(const ExperimentConfig& cfg)
{
    return run_grid_sweep(cfg, ModelKind::wideband);
}

inline Table run_doppler_grid_sweep(const ExperimentConfig& cfg)
{
    return run_grid_sweep(cfg, ModelKind::narrowband);
}

// Random multipath channel on a dictionary grid, offsets set by the policy.
inline Channel random_grid_channel(const GridSpec& g, const ExperimentConfig& cfg, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const bool half = cfg.offset_policy == "half-grid";
    const double hg = half ? g.delta_gamma_s / 2.0 : 0.0;
    const double ha = half ? g.delta_a / 2.0 : 0.0;
    std::vector<long> ps;
    std::vector<long> qs;
    for (long p = g.p_first(); p <= g.p_last(); ++p) {
        const double v = g.gamma(p) + hg;
        if (v >= cfg.gamma_min_s - 1e-12 && v <= cfg.gamma_max_s + 1e-12) {
            ps.push_back(p);
        }
    }
    for (long q = g.q_first(); q <= g.q_last(); ++q) {
        const double v = g.a(q) + ha;
        if (std::abs(v) <= cfg.a_max + 1e-12) {
            qs.push_back(q);
        }
    }
    if (static_cast<long>(ps.size()) < cfg.n_paths || qs.empty()) {
        throw std::invalid_argument("random_grid_channel: grid too small for the requested paths");
    }
    Channel ch;
    std::vector<long> used;
    while (static_cast<long>(ch.paths.size()) < cfg.n_paths) {
        const long p = ps[static_cast<std::size_t>(rng() % ps.size())];
        const long q = qs[static_cast<std::size_t>(rng() % qs.size())];
        if (std::find(used.begin(), used.end(), p) != used.end()) {
            continue;
        }
        used.push_back(p);
        const double u1 = 1.0 - unit_uniform(rng);
        const double u2 = unit_uniform(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const cplx th(r * std::cos(2.0 * pi * u2), r * std::sin(2.0 * pi * u2));
        ch.paths.push_back(ChannelPath{g.gamma(p) + hg, g.a(q) + ha, th});
    }
    return normalized(ch);
}

struct SolverScenario {
    PulseSpec spec;
    GridSpec grid;
    SampleGrid samples;
    Channel channel;
    SymbolSequence pilots;
    SymbolSequence data;
    Dictionary A;
    Dictionary B;
    cvec z;
    cvec y;
};

inline GridSpec solver_grid(const ExperimentConfig& cfg)
{
    const double T = cfg.symbol_period_s();
    return build_grid(cfg.gamma_min_s, cfg.gamma_max_s, cfg.a_max, cfg.grid_delta_gamma_over_T * T, cfg.grid_delta_a, T);
}

inline SolverScenario make_solver_scenario(const ExperimentConfig& cfg, long trial)
{
    SolverScenario sc;
    sc.spec = cfg.pulse();
    sc.grid = solver_grid(cfg);
    const std::uint64_t s0 = trial_seed(cfg, trial);
    sc.channel = random_grid_channel(sc.grid, cfg, mix_seed(s0, channel_stream));
    sc.pilots = generate_qpsk(mix_seed(s0, pilot_stream), static_cast<std::size_t>(cfg.n_train));
    sc.data = generate_qpsk(mix_seed(s0, data_stream), static_cast<std::size_t>(cfg.n_data));
    const double a_ext = std::max(std::abs(sc.grid.a(sc.grid.q_first())), std::abs(sc.grid.a(sc.grid.q_last())));
    sc.samples = covering_grid(sc.spec, static_cast<std::size_t>(std::max(cfg.n_train, cfg.n_data)),
                               sc.grid.gamma(sc.grid.p_first()), sc.grid.gamma(sc.grid.p_last()), a_ext, cfg.margin());
    sc.A = assemble(sc.grid, sc.pilots, sc.spec, cfg.carrier_hz, sc.samples, ModelKind::wideband, cfg.column_limit);
    sc.B = assemble(sc.grid, sc.data, sc.spec, cfg.carrier_hz, sc.samples, ModelKind::wideband, cfg.column_limit);
    sc.z = apply_wideband(sc.channel, sc.pilots, sc.spec, cfg.carrier_hz, sc.samples);
    sc.y = apply_wideband(sc.channel, sc.data, sc.spec, cfg.carrier_hz, sc.samples);
    return sc;
}

/*
 * Rows: trial, snr_db, method, param, training_error, data_error, support_size.
 * OMP param is the iteration count, BP param the lambda multiplier (lambda =
 * multiplier x RMS amplitude of the clean training samples), FBMP param p.
 */
inline Table run_solver_comparison(const ExperimentConfig& cfg)
{
    validate(cfg);
    std::vector<std::vector<std::vector<Cell>>> per_trial(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, cfg.threads, [&](long t) {
        const SolverScenario sc = make_solver_scenario(cfg, t);
        const cmat& A = sc.A.columns;
        const cmat& B = sc.B.columns;
        const double ps = mean_power(sc.z);
        const double rms = std::sqrt(ps);
        const double gain_var = cfg.fbmp_gain_var > 0.0 ? cfg.fbmp_gain_var : 1.0 / static_cast<double>(cfg.n_paths);
        auto& rows = per_trial[static_cast<std::size_t>(t)];
        for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
            const double snr = cfg.snr_db[si];
            const cvec z = add_awgn(sc.z, snr, mix_seed(trial_seed(cfg, t), noise_stream + si));
            const bool clean = std::isinf(snr) && snr > 0.0;
            const double noise_var = ps / std::pow(10.0, (clean ? cfg.noiseless_floor_db : snr) / 10.0);
            auto emit = [&](const char* method, double param, const SparseSolution& sol) {
                const cvec th = sol.dense(A.cols());
                rows.push_back({static_cast<long>(t), snr, std::string(method), param, training_error(z, A, th),
                                data_error(sc.y, B, th), static_cast<long>(sol.support.size())});
            };
            if (cfg.omp_max_iters > 0) {
                const auto path = omp_path(A, z, std::min<long>(cfg.omp_max_iters, A.cols()));
                for (const auto& sol : path) {
                    emit("omp", static_cast<double>(sol.iterations), sol);
                }
            }
            std::vector<double> lams = cfg.bp_lambdas;
            std::sort(lams.begin(), lams.end(), std::greater<>());
            cvec warm = cvec::Zero(A.cols());
            for (double lr : lams) {
                BasisPursuitOptions opt;
                opt.warm_start = &warm;
                const auto sol = basis_pursuit(A, z, lr * rms, cfg.bp_max_iters, cfg.bp_tol, opt);
                warm = sol.dense(A.cols());
                emit("bp", lr, sol);
            }
            for (double p : cfg.fbmp_p) {
                const auto sol = fbmp(A, z, p, noise_var, gain_var, cfg.fbmp_breadth);
                emit("fbmp", p, sol);
            }
        }
    });
    Table tab;
    tab.header = {"trial", "snr_db", "method", "param", "training_error", "data_error", "support_size"};
    for (auto& rows : per_trial) {
        for (auto& r : rows) {
            tab.rows.push_back(std::move(r));
        }
    }
    return tab;
}

// Delta_a holding the large-M wideband bound at `target` (bisection below the first sinc null).
inline double solve_delta_a_for_e_wideband(BoundInputs in, double target)
{
    in.delta_a = 0.0;
    if (e_wideband(in) > target) {
        throw std::domain_error("dopp-vs-scale: target below the zero-spacing floor");
    }
    double lo = 0.0;
    double hi = 1e-7;
    for (int i = 0; i < 200; ++i) {
        in.delta_a = hi;
        if (e_wideband(in) >= target) {
            break;
        }
        lo = hi;
        hi *= 1.25;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        in.delta_a = mid;
        if (e_wideband(in) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline Table run_dopp_vs_scale(const ExperimentConfig& cfg)
{
    if (cfg.paths.size() != 1) {
        throw std::invalid_argument("dopp-vs-scale: exactly one path required");
    }
    Table tab;
    tab.header = {"fc_T",        "delta_a",      "e_wideband", "e_doppler",    "abs_gap",
                  "phi_wideband", "phi_doppler", "phi_gap",    "phi_gap_limit"};
    for (double fct : cfg.fc_T) {
        BoundInputs in;
        in.m_symbols = cfg.n_data;
        in.fc_T = fct;
        in.b_const = cfg.b_const;
        in.symbol_period_s = cfg.symbol_period_s();
        in.delta_gamma_s = 0.0;
        in.paths = {PathWeight{1.0, cfg.paths[0].a}};
        in.delta_a = solve_delta_a_for_e_wideband(in, cfg.e_wideband_target);
        const double ew = e_wideband(in);
        const double ed = e_doppler(in);
        const double pw = phi_wideband(in);
        tab.rows.push_back({fct, in.delta_a, ew, ed, std::abs(ed - ew), pw, phi_doppler(in), phi_gap(in, pw),
                            phi_gap_limit(in)});
    }
    return tab;
}

inline Table run_experiment(const ExperimentConfig& cfg)
{
    if (cfg.experiment == "lti") {
        return run_lti_experiment(cfg);
    }
    if (cfg.experiment == "wideband-sweep") {
        return run_wideband_grid_sweep(cfg);
    }
    if (cfg.experiment == "doppler-sweep") {
        return run_doppler_grid_sweep(cfg);
    }
    if (cfg.experiment == "solver-comparison") {
        return run_solver_comparison(cfg);
    }
    if (cfg.experiment == "dopp-vs-scale") {
        return run_dopp_vs_scale(cfg);
    }
    throw std::invalid_argument("unknown experiment kind: " + cfg.experiment);
}

} // namespace wbce
