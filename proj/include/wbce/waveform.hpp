#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wbce {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;

inline constexpr double pi = std::numbers::pi;

// sinc(x) = sin(pi x) / (pi x)
inline double sinc(double x)
{
    const double px = pi * x;
    if (std::abs(px) < 1e-6) {
        return 1.0 - px * px / 6.0;
    }
    return std::sin(px) / px;
}

// SplitMix64 step, used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct SymbolSequence {
    std::vector<cplx> symbols;
    std::uint64_t seed = 0;
    std::size_t count = 0;

    std::size_t size() const { return symbols.size(); }
    // Symbol index n of entry i, centred so that n runs over -N/2 .. N/2-1.
    long first_index() const { return -static_cast<long>(symbols.size() / 2); }
};

/*
 * QPSK symbols from std::mt19937_64 seeded with `seed`.
 * Each symbol consumes one 64-bit draw: bit 63 selects the sign of the
 * real part and bit 62 the sign of the imaginary part (set bit = negative).
 */
inline SymbolSequence generate_qpsk(std::uint64_t seed, std::size_t count)
{
    if (count == 0) {
        throw std::invalid_argument("generate_qpsk: empty sequence requested");
    }
    std::mt19937_64 rng(seed);
    const double h = 1.0 / std::sqrt(2.0);
    SymbolSequence out;
    out.seed = seed;
    out.count = count;
    out.symbols.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t u = rng();
        const double re = (u >> 63) ? -h : h;
        const double im = ((u >> 62) & 1U) ? -h : h;
        out.symbols.emplace_back(re, im);
    }
    return out;
}

struct PulseSpec {
    double symbol_period_s = 1.0;
    double rolloff = 0.0;
    // Non-positive means untruncated.
    int truncation_half_width_symbols = 128;
    int oversampling = 3;

    double step_s() const { return symbol_period_s / oversampling; }
};

inline void validate(const PulseSpec& spec)
{
    if (!(spec.symbol_period_s > 0.0)) {
        throw std::invalid_argument("PulseSpec: symbol_period_s must be positive");
    }
    if (spec.oversampling < 1) {
        throw std::invalid_argument("PulseSpec: oversampling must be >= 1");
    }
    if (!(spec.rolloff >= 0.0 && spec.rolloff <= 1.0)) {
        throw std::invalid_argument("PulseSpec: rolloff must lie in [0, 1]");
    }
}

struct SampleGrid {
    long first_index = 0;
    long length = 1;
    double step_s = 1.0;

    double time(long i) const { return static_cast<double>(first_index + i) * step_s; }
};

inline void validate(const SampleGrid& g)
{
    if (g.length < 1) {
        throw std::invalid_argument("SampleGrid: length must be >= 1");
    }
    if (!(g.step_s > 0.0)) {
        throw std::invalid_argument("SampleGrid: step_s must be positive");
    }
}

namespace detail {

// Unit-energy SRRC in normalised time x = t/T, times sqrt(T).
inline double srrc_unit(double x, double alpha)
{
    if (alpha <= 0.0) {
        return sinc(x);
    }
    if (std::abs(x) < 1e-9) {
        return 1.0 - alpha + 4.0 * alpha / pi;
    }
    const double xs = 1.0 / (4.0 * alpha);
    if (std::abs(std::abs(x) - xs) < 1e-7) {
        const double a4 = pi / (4.0 * alpha);
        return alpha / std::sqrt(2.0)
            * ((1.0 + 2.0 / pi) * std::sin(a4) + (1.0 - 2.0 / pi) * std::cos(a4));
    }
    const double num = std::sin(pi * x * (1.0 - alpha)) + 4.0 * alpha * x * std::cos(pi * x * (1.0 + alpha));
    const double den = pi * x * (1.0 - 16.0 * alpha * alpha * x * x);
    return num / den;
}

// Composite Simpson estimate of the truncated pulse energy in normalised time.
inline double truncated_energy(double alpha, int k)
{
    static std::mutex mu;
    static std::map<std::pair<double, int>, double> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({alpha, k});
    if (it != cache.end()) {
        return it->second;
    }
    const long n = 2L * k * 128;
    const double h = 2.0 * k / static_cast<double>(n);
    double acc = 0.0;
    for (long i = 0; i <= n; ++i) {
        const double x = -k + h * static_cast<double>(i);
        const double v = srrc_unit(x, alpha);
        const double w = (i == 0 || i == n) ? 1.0 : ((i % 2) ? 4.0 : 2.0);
        acc += w * v * v;
    }
    const double e = acc * h / 3.0;
    cache.emplace(std::make_pair(alpha, k), e);
    return e;
}

} // namespace detail

// Pulse evaluator with the truncation normalisation resolved once.
class PulseShape {
public:
    explicit PulseShape(const PulseSpec& spec) : spec_(spec)
    {
        validate(spec_);
        half_width_ = spec_.truncation_half_width_symbols;
        double scale = 1.0;
        if (half_width_ > 0) {
            scale = 1.0 / std::sqrt(detail::truncated_energy(spec_.rolloff, half_width_));
        }
        amp_ = scale / std::sqrt(spec_.symbol_period_s);
    }

    const PulseSpec& spec() const { return spec_; }
    int half_width() const { return half_width_; }
    double amplitude() const { return amp_; }

    // p at normalised time x = t/T.
    double at_x(double x) const
    {
        if (half_width_ > 0 && std::abs(x) > half_width_) {
            return 0.0;
        }
        return amp_ * detail::srrc_unit(x, spec_.rolloff);
    }

    double operator()(double t) const { return at_x(t / spec_.symbol_period_s); }

    // sum_n b_n p(x T - n T) for the centred symbol indices.
    cplx train_at_x(const SymbolSequence& sym, double x) const
    {
        const long n0 = sym.first_index();
        const long n1 = n0 + static_cast<long>(sym.size()) - 1;
        long lo = n0;
        long hi = n1;
        if (half_width_ > 0) {
            lo = std::max(lo, static_cast<long>(std::ceil(x - half_width_)));
            hi = std::min(hi, static_cast<long>(std::floor(x + half_width_)));
        }
        if (lo > hi) {
            return {0.0, 0.0};
        }
        cplx acc(0.0, 0.0);
        if (spec_.rolloff <= 0.0) {
            // sin(pi (x - n)) = (-1)^n sin(pi x)
            const double s = std::sin(pi * x) / pi;
            for (long n = lo; n <= hi; ++n) {
                const double d = x - static_cast<double>(n);
                double v;
                if (std::abs(d) < 1e-6) {
                    v = sinc(d);
                } else {
                    v = ((n & 1L) ? -s : s) / d;
                }
                acc += sym.symbols[static_cast<std::size_t>(n - n0)] * v;
            }
        } else {
            for (long n = lo; n <= hi; ++n) {
                acc += sym.symbols[static_cast<std::size_t>(n - n0)]
                    * detail::srrc_unit(x - static_cast<double>(n), spec_.rolloff);
            }
        }
        return acc * amp_;
    }

private:
    PulseSpec spec_;
    int half_width_ = 0;
    double amp_ = 1.0;
};

inline double srrc_value(const PulseSpec& spec, double t)
{
    return PulseShape(spec)(t);
}

// R(tau) = cos(pi a x) / (1 - (2 a x)^2) sinc(x), x = tau/T.
inline double raised_cosine_value(const PulseSpec& spec, double tau)
{
    const double x = tau / spec.symbol_period_s;
    const double a = spec.rolloff;
    const double s = sinc(x);
    if (a <= 0.0) {
        return s;
    }
    const double d = 1.0 - 4.0 * a * a * x * x;
    if (std::abs(d) < 1e-10) {
        return pi / 4.0 * sinc(1.0 / (2.0 * a));
    }
    return std::cos(pi * a * x) / d * s;
}

inline cplx synthesize_baseband(const SymbolSequence& symbols, const PulseSpec& spec, double t)
{
    if (symbols.size() == 0) {
        throw std::invalid_argument("synthesize_baseband: empty symbol sequence");
    }
    return PulseShape(spec).train_at_x(symbols, t / spec.symbol_period_s);
}

inline cvec sample_waveform(const SymbolSequence& symbols, const PulseSpec& spec, const SampleGrid& grid)
{
    validate(grid);
    if (symbols.size() == 0) {
        throw std::invalid_argument("sample_waveform: empty symbol sequence");
    }
    PulseShape shape(spec);
    cvec out(grid.length);
    for (long k = 0; k < grid.length; ++k) {
        out[k] = shape.train_at_x(symbols, grid.time(k) / spec.symbol_period_s);
    }
    return out;
}

inline SampleGrid make_sample_grid(const PulseSpec& spec, long first_index, long length)
{
    return SampleGrid{first_index, length, spec.step_s()};
}

/*
 * Smallest grid of step T/P holding every pulse of an N-symbol train
 * delayed by any gamma in [gamma_min, gamma_max] and dilated by any |a| <= a_max,
 * with `margin_symbols` of tail kept on each side.
 */
inline SampleGrid covering_grid(const PulseSpec& spec, std::size_t n_symbols, double gamma_min, double gamma_max,
                                double a_max, double margin_symbols)
{
    validate(spec);
    const double T = spec.symbol_period_s;
    const long n0 = -static_cast<long>(n_symbols / 2);
    const long n1 = n0 + static_cast<long>(n_symbols) - 1;
    const double u_lo = (static_cast<double>(n0) - margin_symbols) * T;
    const double u_hi = (static_cast<double>(n1) + margin_symbols) * T;
    const double s_lo = 1.0 / (1.0 + a_max);
    const double s_hi = 1.0 / (1.0 - a_max);
    const double t_lo = gamma_min + std::min(u_lo * s_lo, u_lo * s_hi);
    const double t_hi = gamma_max + std::max(u_hi * s_lo, u_hi * s_hi);
    const double step = spec.step_s();
    const long h = static_cast<long>(std::floor(t_lo / step));
    const long e = static_cast<long>(std::ceil(t_hi / step));
    return SampleGrid{h, e - h + 1, step};
}

} // namespace wbce
