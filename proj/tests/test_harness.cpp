#include "wbce/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace wbce;

namespace {

std::string csv(const Table& t)
{
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

struct TestStream {
    PulseSpec spec;
    SymbolSequence b;
    SampleGrid grid;
    cvec z;
};

TestStream lti_stream(double gamma_over_T)
{
    TestStream s;
    s.spec.symbol_period_s = 1e-3;
    s.spec.truncation_half_width_symbols = 32;
    s.b = generate_qpsk(77, 140);
    s.grid = covering_grid(s.spec, 140, 0.0, 1e-3, 0.0, 0.0);
    const Channel ch{{ChannelPath{gamma_over_T * 1e-3, 0.0, {0.9, 0.2}}}};
    s.z = apply_wideband(ch, s.b, s.spec, 2000.0, s.grid);
    return s;
}

cmat lti_atoms(const TestStream& s, double spacing_over_T)
{
    const int n = static_cast<int>(std::round(1.0 / spacing_over_T)) + 1;
    cmat A(s.grid.length, n);
    for (int p = 0; p < n; ++p) {
        const Channel ch{{ChannelPath{p * spacing_over_T * 1e-3, 0.0, {1, 0}}}};
        A.col(p) = apply_wideband(ch, s.b, s.spec, 2000.0, s.grid);
    }
    return A;
}

ExperimentConfig small(const std::string& kind)
{
    ExperimentConfig c = default_config(kind);
    c.trials = 2;
    if (kind == "wideband-sweep" || kind == "doppler-sweep") {
        c.n_train = c.n_data = 60;
        c.truncation_symbols = 32;
        c.delta_gamma_over_T = {0.0, 0.2};
        c.delta_a = {0.0, 2e-3};
    }
    if (kind == "lti") {
        c.n_train = c.n_data = 40;
        c.truncation_symbols = 32;
        c.delta_gamma_over_T = {0.0, 0.25, 0.5};
    }
    if (kind == "solver-comparison") {
        c.n_train = c.n_data = 40;
        c.truncation_symbols = 16;
        c.gamma_min_s = 0.010;
        c.gamma_max_s = 0.0106;
        c.a_max = 5e-4;
        c.grid_delta_a = 5e-4;
        c.snr_db = {std::numeric_limits<double>::infinity(), 10.0};
        c.omp_max_iters = 5;
        c.bp_lambdas = {0.5, 2.0};
        c.fbmp_p = {0.02, 0.05};
        c.fbmp_breadth = 2;
    }
    return c;
}

} // namespace

TEST(Metrics, PerSymbolError)
{
    const cvec y = cvec::Constant(30, cplx(1.0, -1.0));
    EXPECT_EQ(per_symbol_error(y, y, 10, 0.1), 0.0);
    TestStream s = lti_stream(0.0);
    const cvec zero = cvec::Zero(s.z.size());
    EXPECT_NEAR(per_symbol_error(s.z / std::abs(cplx(0.9, 0.2)), zero, 140, s.grid.step_s), 1.0, 0.02);
    EXPECT_THROW(per_symbol_error(y, cvec(3), 1, 1.0), std::invalid_argument);
}

TEST(Metrics, LtiHalfSpacingWithinBound)
{
    PulseSpec spec;
    spec.symbol_period_s = 1.0 / 24000.0;
    const double T = spec.symbol_period_s;
    const PulseShape shape(spec);
    const auto b = generate_qpsk(1, 100);
    const auto c = generate_qpsk(2, 100);
    const SampleGrid g = covering_grid(spec, 100, 0.007, 0.007 + T, 0.0, 128);
    const ChannelPath truth{0.007, 0.0, {1, 0}};
    const cvec s = single_path(truth, b, shape, 18000.0, g, ModelKind::wideband);
    const cvec d = single_path(truth, c, shape, 18000.0, g, ModelKind::wideband);
    for (double dg : {0.1, 0.3, 0.5}) {
        const double e = single_path_trial_error(truth, 0.007 + dg * T / 2, 0.0, b, c, s, d, shape, 18000.0, g,
                                                 ModelKind::wideband);
        EXPECT_LE(e, lti_error_bound(dg * T, 100, spec)) << dg;
    }
}

TEST(Metrics, TrainingAndDataError)
{
    const cmat A = cmat::Identity(4, 3);
    cvec th(3);
    th << cplx(1, 0), cplx(0, 2), cplx(-1, 1);
    const cvec z = A * th;
    EXPECT_EQ(training_error(z, A, th), 0.0);
    EXPECT_DOUBLE_EQ(data_error(z, A, cvec::Zero(3)), 1.0);
    EXPECT_THROW(training_error(cvec::Zero(4), A, th), std::invalid_argument);
    EXPECT_THROW(data_error(z, A, cvec::Zero(2)), std::invalid_argument);
}

TEST(Metrics, NoiselessOmpErrorsDecrease)
{
    ExperimentConfig c = small("solver-comparison");
    c.offset_policy = "nearest-grid";
    const SolverScenario sc = make_solver_scenario(c, 0);
    const auto path = omp_path(sc.A.columns, sc.z, 6);
    double prev_t = 2.0;
    for (const auto& sol : path) {
        const cvec th = sol.dense(sc.A.cols());
        const double t = training_error(sc.z, sc.A.columns, th);
        EXPECT_LE(t, prev_t + 1e-12);
        prev_t = t;
    }
    const double d1 = data_error(sc.y, sc.B.columns, path[0].dense(sc.A.cols()));
    const double d3 = data_error(sc.y, sc.B.columns, path[2].dense(sc.A.cols()));
    EXPECT_LT(d3, d1);
    std::vector<long> truth;
    for (const auto& pth : sc.channel.paths) {
        const auto [p, q] = nearest_grid_point(sc.grid, pth.gamma_s, pth.a);
        truth.push_back(sc.A.column_of(p, q));
    }
    const cvec cf = least_squares_on_support(sc.A.columns, truth, sc.z);
    cvec th = cvec::Zero(sc.A.cols());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        th[truth[i]] = cf[static_cast<Eigen::Index>(i)];
    }
    EXPECT_LT(data_error(sc.y, sc.B.columns, th), 1e-10);
}

TEST(Prediction, OnGridLtiStreamIsPredictable)
{
    const TestStream s = lti_stream(0.5);
    const auto r = prediction_error(s.z, 200, 200, 299, lti_predictor(lti_atoms(s, 0.25)));
    EXPECT_EQ(r.squared_errors.size(), 100u);
    EXPECT_LT(r.aggregate, 1e-16);
}

TEST(Prediction, AggregateGrowsWithSpacing)
{
    const TestStream s = lti_stream(0.3);
    double prev = -1.0;
    for (double sp : {1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}) {
        const double agg = prediction_error(s.z, 200, 200, 299, lti_predictor(lti_atoms(s, sp))).aggregate;
        EXPECT_GT(agg, prev) << sp;
        prev = agg;
    }
}

TEST(Prediction, ArgumentChecks)
{
    const TestStream s = lti_stream(0.0);
    const auto pred = lti_predictor(lti_atoms(s, 0.5));
    EXPECT_THROW(prediction_error(s.z, 0, 10, 20, pred), std::invalid_argument);
    EXPECT_THROW(prediction_error(s.z.head(50), 50, 50, 50, pred), std::invalid_argument);
    EXPECT_THROW(prediction_error(s.z, 200, 100, 120, pred), std::invalid_argument);
}

TEST(Csv, Formatting)
{
    Table t;
    t.header = {"x", "n", "s"};
    t.rows.push_back({1.0 / 3.0, 42L, std::string("omp")});
    t.rows.push_back({std::numeric_limits<double>::infinity(), -1L, std::string("bp")});
    EXPECT_EQ(csv(t), "x,n,s\n0.333333333,42,omp\ninf,-1,bp\n");
}

TEST(Config, JsonOverlayAndUnknownKeys)
{
    const auto j = nlohmann::json::parse(R"({"experiment": "solver-comparison", "trials": 3, "seed": 9,
        "snr_db": [null, "inf", 3.5], "paths": [{"gamma_s": 0.01, "a": 0.001}]})");
    const ExperimentConfig c = config_from_json(j);
    EXPECT_EQ(c.trials, 3);
    EXPECT_EQ(c.seed, 9u);
    ASSERT_EQ(c.snr_db.size(), 3u);
    EXPECT_TRUE(std::isinf(c.snr_db[0]));
    EXPECT_TRUE(std::isinf(c.snr_db[1]));
    EXPECT_EQ(c.snr_db[2], 3.5);
    EXPECT_EQ(c.paths[0].theta_re, 1.0);
    EXPECT_EQ(c.carrier_hz, 10000.0);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"experiment": "lti", "trails": 3})")),
                 std::invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"experiment": "lti", "paths": [{"gama_s": 1}]})")),
                 std::invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"trials": 3})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"experiment": "nope"})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"experiment": "lti", "trials": 0})")),
                 std::invalid_argument);
    EXPECT_EQ(config_from_json(nlohmann::json::parse(R"({"trials": 4})"), "lti").trials, 4);
}

TEST(Experiments, LtiRowsAndOrdering)
{
    const Table t = run_lti_experiment(small("lti"));
    ASSERT_EQ(t.rows.size(), 12u);
    const ExperimentConfig c = small("lti");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double dg = t.num(i, "delta_gamma_over_T");
        EXPECT_EQ(t.num(i, "bound"), lti_error_bound(dg * c.symbol_period_s(), c.n_train, c.pulse()));
        if (dg == 0.0) {
            EXPECT_LT(t.num(i, "mean_error"), 0.01);
        }
    }
    // offsets of delta/5 never do worse than delta/2
    for (std::size_t i = 0; i < t.rows.size(); i += 4) {
        EXPECT_LE(t.num(i + 3, "mean_error"), t.num(i, "mean_error") + 1e-12);
    }
}

TEST(Experiments, SweepBoundColumnsMatchAnalysis)
{
    for (const char* kind : {"wideband-sweep", "doppler-sweep"}) {
        const ExperimentConfig c = small(kind);
        const Table t = run_experiment(c);
        ASSERT_EQ(t.rows.size(), 4u);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const BoundInputs in = sweep_bound_inputs(c, t.num(i, "delta_gamma_over_T"), t.num(i, "delta_a"));
            const double b = std::string(kind) == "wideband-sweep" ? wideband_error_bound(in, false)
                                                                   : doppler_error_bound(in, false);
            EXPECT_EQ(t.num(i, "bound"), b);
            EXPECT_GE(t.num(i, "mean_error"), 0.0);
        }
    }
}

TEST(Experiments, HalfGridOffsetsAreExact)
{
    ExperimentConfig c = small("wideband-sweep");
    c.trials = 1;
    c.delta_gamma_over_T = {0.2};
    c.delta_a = {2e-3};
    const Table t = run_experiment(c);
    // the same cell evaluated by hand at exactly half a spacing away
    const PulseSpec spec = c.pulse();
    const double T = spec.symbol_period_s;
    const PulseShape shape(spec);
    const ChannelPath truth{0.0, -0.001, {1, 0}};
    const auto b = generate_qpsk(mix_seed(c.seed, pilot_stream), 60);
    const auto d = generate_qpsk(mix_seed(c.seed, data_stream), 60);
    const SampleGrid g = covering_grid(spec, 60, 0.0, 0.1 * T, 0.001, c.margin());
    const cvec s = single_path(truth, b, shape, c.carrier_hz, g, ModelKind::wideband);
    const cvec y = single_path(truth, d, shape, c.carrier_hz, g, ModelKind::wideband);
    const double e = single_path_trial_error(truth, 0.1 * T, 0.0, b, d, s, y, shape, c.carrier_hz, g, ModelKind::wideband);
    EXPECT_NEAR(t.num(0, "mean_error"), e, 1e-12);
}

TEST(Experiments, ReproducibleAndThreadIndependent)
{
    ExperimentConfig c = small("wideband-sweep");
    const std::string a = csv(run_experiment(c));
    EXPECT_EQ(a, csv(run_experiment(c)));
    c.threads = 2;
    EXPECT_EQ(a, csv(run_experiment(c)));
    c.seed = 2;
    EXPECT_NE(a, csv(run_experiment(c)));
}

TEST(Experiments, SolverComparisonRuns)
{
    ExperimentConfig c = small("solver-comparison");
    const Table t = run_solver_comparison(c);
    // per trial and snr: 5 omp + 2 bp + 2 fbmp
    EXPECT_EQ(t.rows.size(), 2u * 2u * 9u);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_GE(t.num(i, "training_error"), 0.0);
        EXPECT_GE(t.num(i, "data_error"), 0.0);
    }
    c.threads = 2;
    EXPECT_EQ(csv(t), csv(run_solver_comparison(c)));
}

TEST(Experiments, RandomChannelRespectsPolicy)
{
    ExperimentConfig c = small("solver-comparison");
    const GridSpec g = solver_grid(c);
    const Channel half = random_grid_channel(g, c, 5);
    EXPECT_EQ(static_cast<long>(half.paths.size()), c.n_paths);
    EXPECT_NEAR(path_energy(half), 1.0, 1e-12);
    for (const auto& p : half.paths) {
        const GridPoint n = nearest_grid_point(g, p.gamma_s, p.a);
        EXPECT_NEAR(std::abs(p.gamma_s - g.gamma(n.p)), g.delta_gamma_s / 2, 1e-12);
        EXPECT_NEAR(std::abs(p.a - g.a(n.q)), g.delta_a / 2, 1e-12);
        EXPECT_LE(std::abs(p.a), c.a_max + 1e-12);
    }
    c.offset_policy = "nearest-grid";
    for (const auto& p : random_grid_channel(g, c, 5).paths) {
        const GridPoint n = nearest_grid_point(g, p.gamma_s, p.a);
        EXPECT_NEAR(p.gamma_s, g.gamma(n.p), 1e-15);
        EXPECT_NEAR(p.a, g.a(n.q), 1e-15);
    }
}

TEST(Experiments, DoppVsScaleHoldsWidebandConstant)
{
    const Table t = run_dopp_vs_scale(default_config("dopp-vs-scale"));
    const double e0 = t.num(0, "e_wideband");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_NEAR(t.num(i, "e_wideband"), e0, 0.005 * e0);
        EXPECT_GT(t.num(i, "delta_a"), 0.0);
    }
}
