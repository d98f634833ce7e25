#pragma once

#include "wbce/channel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbce {

enum class ModelKind { wideband, narrowband };

inline const char* to_string(ModelKind k)
{
    return k == ModelKind::wideband ? "wideband" : "narrowband";
}

struct GridSpec {
    double delta_gamma_s = 0.0;
    double delta_a = 0.0;
    long n0 = 0;
    long n_gamma = 1;
    long n_a = 2;
    long n_b = 1;

    long p_first() const { return n0; }
    long p_last() const { return n0 + n_gamma - 1; }
    long q_first() const { return -n_a / 2; }
    long q_last() const { return n_a / 2 - 1; }
    double gamma(long p) const { return static_cast<double>(p) * delta_gamma_s; }
    double a(long q) const { return static_cast<double>(q) * delta_a; }
    long columns() const { return n_gamma * n_a * n_b; }
};

struct GridIndex {
    long p = 0;
    long q = 0;
    long i = 0;
};

inline constexpr double grid_eps = 1e-9;

inline GridSpec build_grid(double gamma_min_s, double gamma_max_s, double a_max, double delta_gamma_s,
                           double delta_a, double symbol_period_s)
{
    if (!(delta_gamma_s > 0.0) || !(delta_a > 0.0)) {
        throw std::invalid_argument("build_grid: spacings must be positive");
    }
    if (!(a_max >= 0.0)) {
        throw std::invalid_argument("build_grid: a_max must be >= 0");
    }
    if (!(gamma_min_s >= 0.0) || !(gamma_max_s >= gamma_min_s)) {
        throw std::invalid_argument("build_grid: need 0 <= gamma_min <= gamma_max");
    }
    if (delta_gamma_s > symbol_period_s / 2.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "build_grid: delay spacing " << delta_gamma_s << " s exceeds T/2 = " << symbol_period_s / 2.0 << " s";
        throw std::invalid_argument(os.str());
    }
    GridSpec g;
    g.delta_gamma_s = delta_gamma_s;
    g.delta_a = delta_a;
    g.n0 = static_cast<long>(std::floor(gamma_min_s / delta_gamma_s + grid_eps));
    const long p_hi = static_cast<long>(std::ceil(gamma_max_s / delta_gamma_s - grid_eps));
    g.n_gamma = std::max(1L, p_hi - g.n0 + 1);
    const long half = static_cast<long>(std::ceil(a_max / delta_a - grid_eps)) + 1;
    g.n_a = 2 * std::max(1L, half);
    g.n_b = 1;
    return g;
}

// True when all four coverage inequalities hold for the stated targets.
inline bool covers(const GridSpec& g, double gamma_min_s, double gamma_max_s, double a_max)
{
    const double tg = grid_eps * g.delta_gamma_s;
    const double ta = grid_eps * g.delta_a;
    return g.gamma(g.p_first()) <= gamma_min_s + tg && g.gamma(g.p_last()) >= gamma_max_s - tg
        && g.a(g.q_first()) <= -a_max + ta && g.a(g.q_last()) >= a_max - ta;
}

inline void check_indices(const GridSpec& g, long p, long q)
{
    if (p < g.p_first() || p > g.p_last() || q < g.q_first() || q > g.q_last()) {
        std::ostringstream os;
        os << "grid index (p=" << p << ", q=" << q << ") outside p in [" << g.p_first() << ", " << g.p_last()
           << "], q in [" << g.q_first() << ", " << g.q_last() << "]";
        throw std::out_of_range(os.str());
    }
}

inline cvec atom(const GridSpec& grid, long p, long q, const SymbolSequence& symbols, const PulseSpec& spec,
                 double fc_hz, const SampleGrid& samplegrid, ModelKind kind)
{
    check_indices(grid, p, q);
    validate(samplegrid);
    ChannelPath path{grid.gamma(p), grid.a(q), {1.0, 0.0}};
    PulseShape shape(spec);
    cvec out = cvec::Zero(samplegrid.length);
    if (kind == ModelKind::wideband) {
        accumulate_wideband(out, path, symbols, shape, fc_hz, samplegrid);
    } else {
        accumulate_narrowband(out, path, symbols, shape, fc_hz, samplegrid);
    }
    return out;
}

struct Dictionary {
    cmat columns;
    std::vector<GridIndex> index_map;
    ModelKind model_kind = ModelKind::wideband;
    GridSpec grid;

    Eigen::Index rows() const { return columns.rows(); }
    Eigen::Index cols() const { return columns.cols(); }

    // Column order: p-major, then q, then i.
    long column_of(long p, long q, long i = 0) const
    {
        check_indices(grid, p, q);
        return ((p - grid.p_first()) * grid.n_a + (q - grid.q_first())) * grid.n_b + i;
    }
};

inline constexpr long default_column_limit = 20000;

inline Dictionary assemble(const GridSpec& grid, const SymbolSequence& symbols, const PulseSpec& spec, double fc_hz,
                           const SampleGrid& samplegrid, ModelKind kind, long column_limit = default_column_limit)
{
    if (grid.n_b != 1) {
        throw std::invalid_argument("assemble: basis expansion with n_b != 1 is not implemented");
    }
    if (grid.n_gamma < 1 || grid.n_a < 2 || grid.n_a % 2 != 0) {
        throw std::invalid_argument("assemble: invalid grid counts");
    }
    const long ncols = grid.columns();
    if (ncols > column_limit) {
        std::ostringstream os;
        os << "assemble: dictionary needs " << ncols << " columns, above the limit of " << column_limit;
        throw std::length_error(os.str());
    }
    validate(samplegrid);
    Dictionary d;
    d.grid = grid;
    d.model_kind = kind;
    d.columns = cmat::Zero(samplegrid.length, ncols);
    d.index_map.resize(static_cast<std::size_t>(ncols));
    PulseShape shape(spec);
    for (long p = grid.p_first(); p <= grid.p_last(); ++p) {
        for (long q = grid.q_first(); q <= grid.q_last(); ++q) {
            const long j = d.column_of(p, q, 0);
            d.index_map[static_cast<std::size_t>(j)] = GridIndex{p, q, 0};
            ChannelPath path{grid.gamma(p), grid.a(q), {1.0, 0.0}};
            cvec col = cvec::Zero(samplegrid.length);
            if (kind == ModelKind::wideband) {
                accumulate_wideband(col, path, symbols, shape, fc_hz, samplegrid);
            } else {
                accumulate_narrowband(col, path, symbols, shape, fc_hz, samplegrid);
            }
            d.columns.col(j) = col;
        }
    }
    return d;
}

struct GridPoint {
    long p = 0;
    long q = 0;
};

// Ties resolve to the smaller index.
inline GridPoint nearest_grid_point(const GridSpec& grid, double gamma_s, double a)
{
    const double gp = gamma_s / grid.delta_gamma_s;
    const double aq = a / grid.delta_a;
    const double lo_g = static_cast<double>(grid.p_first()) - 0.5;
    const double hi_g = static_cast<double>(grid.p_last()) + 0.5;
    const double lo_a = static_cast<double>(grid.q_first()) - 0.5;
    const double hi_a = static_cast<double>(grid.q_last()) + 0.5;
    if (!(gp >= lo_g - grid_eps && gp <= hi_g + grid_eps && aq >= lo_a - grid_eps && aq <= hi_a + grid_eps)) {
        std::ostringstream os;
        os << "nearest_grid_point: (gamma=" << gamma_s << ", a=" << a << ") outside grid coverage";
        throw std::out_of_range(os.str());
    }
    GridPoint r;
    r.p = std::clamp(static_cast<long>(std::ceil(gp - 0.5 - grid_eps)), grid.p_first(), grid.p_last());
    r.q = std::clamp(static_cast<long>(std::ceil(aq - 0.5 - grid_eps)), grid.q_first(), grid.q_last());
    return r;
}

} // namespace wbce
