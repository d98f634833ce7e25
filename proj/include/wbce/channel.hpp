#pragma once

#include "wbce/waveform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbce {

struct ChannelPath {
    double gamma_s = 0.0;
    double a = 0.0;
    cplx theta{1.0, 0.0};
};

inline void validate(const ChannelPath& p)
{
    if (!(std::abs(p.a) < 1.0)) {
        throw std::invalid_argument("ChannelPath: |a| must be < 1");
    }
    if (!(p.gamma_s >= 0.0)) {
        throw std::invalid_argument("ChannelPath: gamma_s must be >= 0");
    }
}

struct Channel {
    std::vector<ChannelPath> paths;
    bool energy_preserving = false;
};

inline double path_energy(const Channel& ch)
{
    double e = 0.0;
    for (const auto& p : ch.paths) {
        e += std::norm(p.theta);
    }
    return e;
}

inline void validate(const Channel& ch)
{
    for (const auto& p : ch.paths) {
        validate(p);
    }
    if (ch.energy_preserving && std::abs(path_energy(ch) - 1.0) > 1e-12) {
        throw std::invalid_argument("Channel: flagged energy preserving but sum |theta|^2 != 1");
    }
}

// Rescale gains so that sum |theta|^2 = 1 and set the flag.
inline Channel normalized(Channel ch)
{
    const double e = path_energy(ch);
    if (!(e > 0.0)) {
        throw std::invalid_argument("normalized: channel has zero energy");
    }
    const double s = 1.0 / std::sqrt(e);
    for (auto& p : ch.paths) {
        p.theta *= s;
    }
    ch.energy_preserving = true;
    return ch;
}

struct MovingReceiverGeometry {
    double sigma0_m = 0.0;
    double phi0_m = 0.0;
    double vh_mps = 0.0;
    double vv_mps = 0.0;
    double c_mps = 1500.0;
};

struct SurfaceBounceGeometry {
    double sigmaS0_m = 0.0;
    double sigmaR0_m = 0.0;
    double phi0_m = 0.0;
    double vh_mps = 0.0;
    double vv_mps = 0.0;
    double c_mps = 1500.0;
};

inline double delay_at(const ChannelPath& path, double t)
{
    return (1.0 - path.a) * path.gamma_s + path.a * t;
}

// Exact propagation delay of the moving-receiver geometry.
inline double exact_delay(const MovingReceiverGeometry& g, double t)
{
    const double s = g.sigma0_m + g.vh_mps * t;
    const double f = g.phi0_m + g.vv_mps * t;
    return std::hypot(s, f) / g.c_mps;
}

// Exact delay of the surface bounce: source leg plus receiver leg.
inline double exact_delay(const SurfaceBounceGeometry& g, double t)
{
    const double f = g.phi0_m + g.vv_mps * t;
    const double ls = std::hypot(g.sigmaS0_m + g.vh_mps * t, f);
    const double lr = std::hypot(f, g.sigmaR0_m - g.vh_mps * t);
    return (ls + lr) / g.c_mps;
}

inline ChannelPath path_from_moving_receiver(const MovingReceiverGeometry& g)
{
    if (!(g.c_mps > 0.0)) {
        throw std::invalid_argument("path_from_moving_receiver: c_mps must be positive");
    }
    const double chi = std::hypot(g.sigma0_m, g.phi0_m);
    if (!(chi > 0.0)) {
        throw std::invalid_argument("path_from_moving_receiver: degenerate geometry, zero path length");
    }
    const double cos_t = g.sigma0_m / chi;
    const double sin_t = g.phi0_m / chi;
    ChannelPath p;
    p.a = (g.vh_mps * cos_t + g.vv_mps * sin_t) / g.c_mps;
    p.gamma_s = chi / (g.c_mps * (1.0 - p.a));
    validate(p);
    return p;
}

/*
 * First-order expansion of the two-leg delay. The receiver leg shrinks
 * horizontally as the tangent point moves, so its horizontal term enters
 * with a negative sign.
 */
inline ChannelPath path_from_surface_bounce(const SurfaceBounceGeometry& g)
{
    if (!(g.c_mps > 0.0)) {
        throw std::invalid_argument("path_from_surface_bounce: c_mps must be positive");
    }
    const double chi_s = std::hypot(g.sigmaS0_m, g.phi0_m);
    const double chi_r = std::hypot(g.sigmaR0_m, g.phi0_m);
    if (!(chi_s > 0.0) || !(chi_r > 0.0)) {
        throw std::invalid_argument("path_from_surface_bounce: degenerate geometry, zero leg length");
    }
    const double cos_s = g.sigmaS0_m / chi_s;
    const double sin_s = g.phi0_m / chi_s;
    const double cos_r = g.sigmaR0_m / chi_r;
    const double sin_r = g.phi0_m / chi_r;
    ChannelPath p;
    p.a = (cos_s * g.vh_mps + sin_s * g.vv_mps + sin_r * g.vv_mps - cos_r * g.vh_mps) / g.c_mps;
    p.gamma_s = (chi_s + chi_r) / (g.c_mps * (1.0 - p.a));
    validate(p);
    return p;
}

// Coefficient exactly as printed in the source derivation, kept for comparison.
inline double surface_bounce_printed_rate(const SurfaceBounceGeometry& g)
{
    const double chi_s = std::hypot(g.sigmaS0_m, g.phi0_m);
    const double chi_r = std::hypot(g.sigmaR0_m, g.phi0_m);
    const double cos_r = g.sigmaR0_m / chi_r;
    const double sin_s = g.phi0_m / chi_s;
    const double sin_r = g.phi0_m / chi_r;
    return (cos_r * g.vh_mps + sin_r * g.vv_mps + sin_s * g.vv_mps + cos_r * g.vh_mps) / g.c_mps;
}

namespace detail {

inline void require_nonempty(const Channel& ch, const char* who)
{
    if (ch.paths.empty()) {
        throw std::invalid_argument(std::string(who) + ": channel has no paths");
    }
}

inline cplx carrier_phase(double fc_hz, const ChannelPath& p, double t)
{
    const double arg = -2.0 * pi * fc_hz * delay_at(p, t);
    return {std::cos(arg), std::sin(arg)};
}

} // namespace detail

// Exact delay-and-dilation response of one path to the symbol train.
inline void accumulate_wideband(cvec& out, const ChannelPath& p, const SymbolSequence& symbols,
                                const PulseShape& shape, double fc_hz, const SampleGrid& grid)
{
    const double T = shape.spec().symbol_period_s;
    const double s = std::sqrt(1.0 - p.a);
    for (long k = 0; k < grid.length; ++k) {
        const double t = grid.time(k);
        const double x = (1.0 - p.a) * (t - p.gamma_s) / T;
        const cplx v = shape.train_at_x(symbols, x);
        if (v != cplx(0.0, 0.0)) {
            out[k] += p.theta * s * detail::carrier_phase(fc_hz, p, t) * v;
        }
    }
}

// Delay plus carrier phase ramp, pulses undilated.
inline void accumulate_narrowband(cvec& out, const ChannelPath& p, const SymbolSequence& symbols,
                                  const PulseShape& shape, double fc_hz, const SampleGrid& grid)
{
    const double T = shape.spec().symbol_period_s;
    for (long k = 0; k < grid.length; ++k) {
        const double t = grid.time(k);
        const cplx v = shape.train_at_x(symbols, (t - p.gamma_s) / T);
        if (v != cplx(0.0, 0.0)) {
            out[k] += p.theta * detail::carrier_phase(fc_hz, p, t) * v;
        }
    }
}

inline cvec apply_wideband(const Channel& ch, const SymbolSequence& symbols, const PulseSpec& spec, double fc_hz,
                           const SampleGrid& grid)
{
    detail::require_nonempty(ch, "apply_wideband");
    validate(grid);
    PulseShape shape(spec);
    cvec out = cvec::Zero(grid.length);
    for (const auto& p : ch.paths) {
        accumulate_wideband(out, p, symbols, shape, fc_hz, grid);
    }
    return out;
}

inline cvec apply_narrowband(const Channel& ch, const SymbolSequence& symbols, const PulseSpec& spec, double fc_hz,
                             const SampleGrid& grid)
{
    detail::require_nonempty(ch, "apply_narrowband");
    validate(grid);
    PulseShape shape(spec);
    cvec out = cvec::Zero(grid.length);
    for (const auto& p : ch.paths) {
        accumulate_narrowband(out, p, symbols, shape, fc_hz, grid);
    }
    return out;
}

inline double mean_power(const cvec& x)
{
    return x.squaredNorm() / static_cast<double>(x.size());
}

/*
 * Circular complex Gaussian noise, variance mean|x|^2 / 10^(snr_db/10) per sample.
 * Normals come from Box-Muller on std::mt19937_64 uniforms so the stream is
 * fixed across standard libraries. snr_db = +inf returns the input.
 */
inline cvec add_awgn(const cvec& samples, double snr_db, std::uint64_t seed)
{
    if (samples.size() == 0) {
        throw std::invalid_argument("add_awgn: empty input");
    }
    if (std::isinf(snr_db) && snr_db > 0.0) {
        return samples;
    }
    const double var = mean_power(samples) / std::pow(10.0, snr_db / 10.0);
    const double sd = std::sqrt(var / 2.0);
    std::mt19937_64 rng(seed);
    cvec out = samples;
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        const double u1 = 1.0 - unit_uniform(rng);
        const double u2 = unit_uniform(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[k] += cplx(sd * r * std::cos(2.0 * pi * u2), sd * r * std::sin(2.0 * pi * u2));
    }
    return out;
}

} // namespace wbce
