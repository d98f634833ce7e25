#include "wbce/wbce.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace wbce;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<long> trials;
    std::optional<int> threads;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "CSV output path (stdout if omitted)");
    sub->add_option("--seed", c.seed, "base seed");
    sub->add_option("--trials", c.trials, "number of trials")->check(CLI::PositiveNumber);
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

void emit(const Table& t, const std::string& out)
{
    if (out.empty()) {
        write_csv(std::cout, t);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write " + out);
    }
    write_csv(f, t);
}

int run(const std::string& kind, const Common& c)
{
    ExperimentConfig cfg = c.config.empty() ? default_config(kind) : load_config(c.config, kind);
    if (cfg.experiment != kind) {
        throw std::invalid_argument("config experiment '" + cfg.experiment + "' does not match subcommand '" + kind + "'");
    }
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.trials) {
        cfg.trials = *c.trials;
    }
    if (c.threads) {
        cfg.threads = *c.threads;
    }
    validate(cfg);
    emit(run_experiment(cfg), c.out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wideband channel estimation: error bounds, grid sweeps and sparse solvers"};
    app.require_subcommand(1);

    BoundInputs bi;
    double dg_over_T = 0.0;
    double a = -0.001;
    double T = 1.0;
    double rolloff = 0.0;
    bool no_strict = false;
    std::string out_bounds;
    auto* bounds = app.add_subcommand("bounds", "evaluate the error bounds for one parameter point");
    bounds->add_option("--M", bi.m_symbols, "symbols per block (M = N)")->capture_default_str();
    bounds->add_option("--fcT", bi.fc_T, "carrier frequency times symbol period")->capture_default_str();
    bounds->add_option("--a", a, "delay rate of the single path")->capture_default_str();
    bounds->add_option("--dg", dg_over_T, "delay spacing over T")->capture_default_str();
    bounds->add_option("--da", bi.delta_a, "rate spacing")->capture_default_str();
    bounds->add_option("--B", bi.b_const, "cosine constant")->capture_default_str();
    bounds->add_option("--rolloff", rolloff, "pulse roll-off for the LTI bound")->capture_default_str();
    bounds->add_flag("--no-strict", no_strict, "evaluate even when assumptions are violated");
    bounds->add_option("--out", out_bounds, "CSV output path (stdout if omitted)");

    const char* kinds[][2] = {{"lti", "lti"},
                              {"wideband-sweep", "wideband-sweep"},
                              {"doppler-sweep", "doppler-sweep"},
                              {"solvers", "solver-comparison"},
                              {"dopp-vs-scale", "dopp-vs-scale"}};
    std::vector<Common> commons(5);
    std::vector<CLI::App*> subs;
    const char* help[] = {"time-invariant delay-grid experiment", "wideband grid sweep",
                          "Doppler-model grid sweep", "OMP / BP / FBMP comparison",
                          "Doppler vs wideband bound as fc T grows"};
    for (int i = 0; i < 5; ++i) {
        subs.push_back(app.add_subcommand(kinds[i][0], help[i]));
        add_common(subs.back(), commons[static_cast<std::size_t>(i)]);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (bounds->parsed()) {
            bi.paths = {PathWeight{1.0, a}};
            bi.symbol_period_s = T;
            bi.delta_gamma_s = dg_over_T * T;
            PulseSpec spec;
            spec.rolloff = rolloff;
            const auto cw = check_bound_assumptions(bi, ModelKind::wideband);
            const auto cd = check_bound_assumptions(bi, ModelKind::narrowband);
            if (!no_strict && (!cw.ok() || !cd.ok())) {
                std::cerr << "assumption violated: " << (cw.ok() ? cd.message() : cw.message())
                          << " (use --no-strict to evaluate anyway)\n";
                return 2;
            }
            Table t;
            t.header = {"m_symbols", "delta_gamma_over_T", "delta_a", "fc_T", "a", "b_const", "wideband_bound",
                        "doppler_bound", "lti_bound", "wideband_assumptions_ok", "doppler_assumptions_ok"};
            const double lti = dg_over_T <= 0.5 ? lti_error_bound(dg_over_T, bi.m_symbols, spec)
                                                : std::numeric_limits<double>::quiet_NaN();
            t.rows.push_back({bi.m_symbols, dg_over_T, bi.delta_a, bi.fc_T, a, bi.b_const,
                              wideband_error_bound(bi, false), doppler_error_bound(bi, false), lti,
                              static_cast<long>(cw.ok()), static_cast<long>(cd.ok())});
            emit(t, out_bounds);
            return 0;
        }
        for (int i = 0; i < 5; ++i) {
            if (subs[static_cast<std::size_t>(i)]->parsed()) {
                return run(kinds[i][1], commons[static_cast<std::size_t>(i)]);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
