#pragma once

#include "wbce/dictionary.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbce {

inline constexpr double default_b = 1.8138;
inline constexpr double alpha_bound_const = 0.694;
inline constexpr double omega_bound_const = 1.2011;

// Riemann approximation of the integral of x(t) y*(t).
inline cplx inner_product(const cvec& x, const cvec& y, double step_s)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("inner_product: length mismatch");
    }
    return y.dot(x) * step_s;
}

inline cplx analytic_gain_estimate(const cvec& s, const cvec& s_hat, cplx theta, long n_symbols, double step_s)
{
    if (n_symbols < 1) {
        throw std::invalid_argument("analytic_gain_estimate: n_symbols must be >= 1");
    }
    return inner_product(s, s_hat, step_s) * theta / static_cast<double>(n_symbols);
}

// Spectrum of the unit-energy SRRC in normalised frequency nu = f T, divided by sqrt(T).
inline double srrc_spectrum(double nu, double alpha)
{
    const double f = std::abs(nu);
    const double lo = (1.0 - alpha) / 2.0;
    const double hi = (1.0 + alpha) / 2.0;
    if (f <= lo) {
        return 1.0;
    }
    if (f >= hi || alpha <= 0.0) {
        return 0.0;
    }
    return std::cos(pi / (2.0 * alpha) * (f - lo));
}

/*
 * W(lambda, beta) by quadrature of the frequency-domain form
 * (1/sqrt(beta)) * integral of P(f) P(f/beta) cos(2 pi f lambda) df
 * for the untruncated pulse, split at the spectral breakpoints.
 */
inline double wideband_ambiguity_quadrature(double lambda_s, double beta, const PulseSpec& spec)
{
    if (!(beta > 0.0)) {
        throw std::invalid_argument("wideband_ambiguity: beta must be positive");
    }
    const double alpha = spec.rolloff;
    const double lam = lambda_s / spec.symbol_period_s;
    auto f = [&](double nu) {
        return srrc_spectrum(nu, alpha) * srrc_spectrum(nu / beta, alpha) * std::cos(2.0 * pi * nu * lam);
    };
    std::vector<double> cuts{0.0, (1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0, beta * (1.0 - alpha) / 2.0,
                             beta * (1.0 + alpha) / 2.0};
    const double top = std::min(1.0, beta) * (1.0 + alpha) / 2.0;
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = std::min(cuts[i + 1], top);
        if (b <= a) {
            continue;
        }
        const double span = b - a;
        const int pieces = std::max(1, static_cast<int>(std::ceil(span * std::abs(lam) * 2.0)));
        for (int k = 0; k < pieces; ++k) {
            const double u = a + span * k / pieces;
            const double v = a + span * (k + 1) / pieces;
            acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, u, v, 0, 0.0);
        }
    }
    return 2.0 * acc / std::sqrt(beta);
}

// For zero roll-off: (min(1,beta)/sqrt(beta)) sinc(min(1,beta) lambda / T).
inline double wideband_ambiguity(double lambda_s, double beta, const PulseSpec& spec)
{
    if (!(beta > 0.0)) {
        throw std::invalid_argument("wideband_ambiguity: beta must be positive");
    }
    if (spec.rolloff <= 0.0) {
        const double m = std::min(1.0, beta);
        return m / std::sqrt(beta) * sinc(m * lambda_s / spec.symbol_period_s);
    }
    return wideband_ambiguity_quadrature(lambda_s, beta, spec);
}

inline double alpha_term(long n_symbols, double delta_frac, const PulseSpec& spec)
{
    if (n_symbols < 1) {
        throw std::invalid_argument("alpha_term: n_symbols must be >= 1");
    }
    if (std::abs(delta_frac) > 0.25) {
        throw std::domain_error("alpha_term: |delta| must be <= 0.25");
    }
    const double T = spec.symbol_period_s;
    double acc = 0.0;
    for (long m = 1 - n_symbols; m <= n_symbols - 1; ++m) {
        if (m == 0) {
            continue;
        }
        const double r = raised_cosine_value(spec, (static_cast<double>(m) + delta_frac) * T);
        acc += static_cast<double>(n_symbols - std::abs(m)) * r * r;
    }
    const double n = static_cast<double>(n_symbols);
    return acc / (n * n);
}

inline double alpha_bound(long n_symbols)
{
    if (n_symbols < 1) {
        throw std::invalid_argument("alpha_bound: n_symbols must be >= 1");
    }
    return alpha_bound_const / static_cast<double>(n_symbols);
}

inline double omega_bound(long m_symbols)
{
    if (m_symbols < 10) {
        throw std::domain_error("omega_bound: requires M >= 10");
    }
    return omega_bound_const / static_cast<double>(m_symbols);
}

struct AssumptionCheck {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    std::string message() const
    {
        std::string s;
        for (std::size_t i = 0; i < violations.size(); ++i) {
            s += (i ? "; " : "") + violations[i];
        }
        return s;
    }
};

namespace detail {

inline void require(AssumptionCheck& c, bool cond, const std::string& what)
{
    if (!cond) {
        c.violations.push_back(what);
    }
}

inline std::string fmt_num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline void enforce(const AssumptionCheck& c, const char* who)
{
    if (!c.ok()) {
        throw std::domain_error(std::string(who) + ": assumption violated: " + c.message());
    }
}

} // namespace detail

// gamma_err_s = estimate minus truth.
inline AssumptionCheck check_omega_assumptions(long m_symbols, double gamma_err_s, double a, double a_hat,
                                               const PulseSpec& spec, ModelKind kind)
{
    AssumptionCheck c;
    const double m = static_cast<double>(m_symbols);
    const double lim = 1.0 / (2.0 * m);
    detail::require(c, m_symbols >= 10, "M >= 10 (M = " + std::to_string(m_symbols) + ")");
    detail::require(c, std::abs(a) <= lim, "|a| <= 1/(2M) (|a| = " + detail::fmt_num(std::abs(a)) + ")");
    detail::require(c, std::abs(gamma_err_s) <= spec.symbol_period_s / 4.0,
                    "|gamma_hat - gamma| <= T/4 (= " + detail::fmt_num(std::abs(gamma_err_s)) + " s)");
    if (kind == ModelKind::wideband) {
        detail::require(c, std::abs(a_hat) <= lim, "|a_hat| <= 1/(2M) (|a_hat| = " + detail::fmt_num(std::abs(a_hat)) + ")");
        detail::require(c, std::abs(a_hat - a) <= lim * (1.0 - lim),
                        "|a_hat - a| <= (1/2M)(1 - 1/2M) (= " + detail::fmt_num(std::abs(a_hat - a)) + ")");
    }
    return c;
}

/*
 * (1/M^2) sum over q != r of W^2(lambda_{q,r}, beta), with
 * wideband:   beta = (1-a)/(1-a_hat), lambda = qT - rT/beta + (1-a_hat)(gamma_hat - gamma)
 * narrowband: beta = 1-a,             lambda = qT - rT/beta + (gamma_hat - gamma)
 */
inline double omega_term(long m_symbols, double gamma_err_s, double a, double a_hat, const PulseSpec& spec,
                         ModelKind kind, bool strict = true)
{
    const auto chk = check_omega_assumptions(m_symbols, gamma_err_s, a, a_hat, spec, kind);
    if (strict) {
        detail::enforce(chk, "omega_term");
    }
    const double T = spec.symbol_period_s;
    double beta;
    double shift;
    if (kind == ModelKind::wideband) {
        beta = (1.0 - a) / (1.0 - a_hat);
        shift = (1.0 - a_hat) * gamma_err_s;
    } else {
        beta = 1.0 - a;
        shift = gamma_err_s;
    }
    const long lo = -m_symbols / 2;
    const long hi = lo + m_symbols - 1;
    double acc = 0.0;
    for (long q = lo; q <= hi; ++q) {
        for (long r = lo; r <= hi; ++r) {
            if (q == r) {
                continue;
            }
            const double lam = static_cast<double>(q) * T - static_cast<double>(r) * T / beta + shift;
            const double w = wideband_ambiguity(lam, beta, spec);
            acc += w * w;
        }
    }
    const double m = static_cast<double>(m_symbols);
    return acc / (m * m);
}

// 1 - R^2(delta_gamma/2) + 0.694/N
inline double lti_error_bound(double delta_gamma_s, long n_symbols, const PulseSpec& spec)
{
    if (delta_gamma_s > spec.symbol_period_s / 2.0 * (1.0 + 1e-12)) {
        throw std::domain_error("lti_error_bound: delay spacing exceeds T/2");
    }
    if (delta_gamma_s < 0.0) {
        throw std::domain_error("lti_error_bound: delay spacing must be >= 0");
    }
    const double r = raised_cosine_value(spec, delta_gamma_s / 2.0);
    return 1.0 - r * r + alpha_bound(n_symbols);
}

struct PathWeight {
    double theta_sq = 1.0;
    double a = 0.0;
};

struct BoundInputs {
    long m_symbols = 300;
    double delta_gamma_s = 0.0;
    double delta_a = 0.0;
    double fc_T = 1.0;
    std::vector<PathWeight> paths{PathWeight{}};
    double b_const = default_b;
    double symbol_period_s = 1.0;
    bool energy_preserving = false;
};

inline AssumptionCheck check_bound_assumptions(const BoundInputs& inp, ModelKind kind)
{
    AssumptionCheck c;
    const double m = static_cast<double>(inp.m_symbols);
    const double lim = 1.0 / (2.0 * m);
    const double T = inp.symbol_period_s;
    detail::require(c, inp.m_symbols >= 10, "M >= 10 (M = " + std::to_string(inp.m_symbols) + ")");
    detail::require(c, inp.b_const > 0.0 && inp.b_const <= pi, "0 < B <= pi (B = " + detail::fmt_num(inp.b_const) + ")");
    detail::require(c, inp.fc_T > 0.0, "fc T > 0");
    detail::require(c, inp.delta_a >= 0.0 && inp.delta_gamma_s >= 0.0, "non-negative grid spacings");
    detail::require(c, !inp.paths.empty(), "at least one path");
    if (inp.energy_preserving) {
        double e = 0.0;
        for (const auto& p : inp.paths) {
            e += p.theta_sq;
        }
        detail::require(c, std::abs(e - 1.0) <= 1e-12, "sum |theta|^2 = 1 (sum = " + detail::fmt_num(e) + ")");
    }
    const double da_lim = lim * (1.0 - lim) / (2.0 * inp.fc_T);
    detail::require(c, inp.delta_a / 2.0 <= da_lim * (1.0 + 1e-12),
                    "|a_hat - a| = delta_a/2 <= (1/2M)(1 - 1/2M)/(2 fc T) (delta_a/2 = " + detail::fmt_num(inp.delta_a / 2.0)
                        + ", limit " + detail::fmt_num(da_lim) + ")");
    const double dg_lim = kind == ModelKind::wideband ? T / 4.0 / (1.0 + lim) : T / 4.0 * (2.0 * m - 2.0) / (2.0 * m - 1.0);
    detail::require(c, inp.delta_gamma_s / 2.0 <= dg_lim * (1.0 + 1e-12),
                    "|gamma_hat - gamma| = delta_gamma/2 within limit " + detail::fmt_num(dg_lim) + " s");
    for (const auto& p : inp.paths) {
        detail::require(c, std::abs(p.a) <= lim, "|a| <= 1/(2M) (a = " + detail::fmt_num(p.a) + ")");
        const double a_hat = p.a + inp.delta_a / 2.0;
        detail::require(c, std::abs(a_hat) <= lim, "|a_hat| <= 1/(2M) (a_hat = " + detail::fmt_num(a_hat) + ")");
    }
    return c;
}

// Coefficients of one path's term: offset - gain cos^2(cos_coeff dg/T) (sinc(s+ da + o) + sinc(s- da - o))^2.
struct BoundTerms {
    double offset = 0.0;
    double gain = 0.0;
    double cos_coeff = 0.0;
    double sinc_plus = 0.0;
    double sinc_minus = 0.0;
    double sinc_shift = 0.0;
};

inline BoundTerms wideband_bound_terms(const BoundInputs& inp, const PathWeight& p)
{
    const double m = static_cast<double>(inp.m_symbols);
    const double b = inp.b_const;
    const double u = pi * inp.fc_T / (1.0 - 1.0 / (2.0 * m));
    BoundTerms t;
    t.offset = p.theta_sq * (1.0 + omega_bound_const / m);
    t.gain = p.theta_sq * (m - 1.0) / (m + 1.0) / 4.0;
    t.cos_coeff = b / 2.0 * (1.0 + 1.0 / m);
    t.sinc_plus = (u + (pi * inp.fc_T + b) / (1.0 - p.a)) * m / (4.0 * pi);
    t.sinc_minus = (u + (pi * inp.fc_T - b) / (1.0 - p.a)) * m / (4.0 * pi);
    t.sinc_shift = 0.0;
    return t;
}

inline BoundTerms doppler_bound_terms(const BoundInputs& inp, const PathWeight& p)
{
    const double m = static_cast<double>(inp.m_symbols);
    const double b = inp.b_const;
    const double v = 1.0 / (1.0 - p.a);
    BoundTerms t;
    t.offset = p.theta_sq * (1.0 + omega_bound_const / m);
    t.gain = p.theta_sq * (1.0 - 1.0 / m) / 4.0;
    t.cos_coeff = b / 2.0;
    t.sinc_plus = pi * inp.fc_T / 2.0 * (1.0 + v) * m / (2.0 * pi);
    t.sinc_minus = t.sinc_plus;
    t.sinc_shift = b * p.a * v * m / (2.0 * pi);
    return t;
}

inline double evaluate_terms(const BoundTerms& t, double dg_over_T, double delta_a)
{
    const double c = std::cos(t.cos_coeff * dg_over_T);
    const double s = sinc(t.sinc_plus * delta_a + t.sinc_shift) + sinc(t.sinc_minus * delta_a - t.sinc_shift);
    return t.offset - t.gain * c * c * s * s;
}

inline double wideband_error_bound(const BoundInputs& inp, bool strict = true)
{
    if (strict) {
        detail::enforce(check_bound_assumptions(inp, ModelKind::wideband), "wideband_error_bound");
    }
    double acc = 0.0;
    for (const auto& p : inp.paths) {
        acc += evaluate_terms(wideband_bound_terms(inp, p), inp.delta_gamma_s / inp.symbol_period_s, inp.delta_a);
    }
    return acc;
}

inline double doppler_error_bound(const BoundInputs& inp, bool strict = true)
{
    if (strict) {
        detail::enforce(check_bound_assumptions(inp, ModelKind::narrowband), "doppler_error_bound");
    }
    double acc = 0.0;
    for (const auto& p : inp.paths) {
        acc += evaluate_terms(doppler_bound_terms(inp, p), inp.delta_gamma_s / inp.symbol_period_s, inp.delta_a);
    }
    return acc;
}

/*
 * Large-M constants of the wideband bound for a single rate a:
 * 1 - gain cos^2(cos_coeff dg/T) (sinc(kappa M da (2 fcT + nu)) + sinc(kappa M da (2 fcT - nu)))^2 + 1.2011/M.
 */
struct TimescaleConstants {
    double gain = 0.0;
    double cos_coeff = 0.0;
    double kappa = 0.0;
    double nu = 0.0;
};

inline TimescaleConstants timescale_constants(long m_symbols, double a, double b_const)
{
    const double m = static_cast<double>(m_symbols);
    const double u = 1.0 / (1.0 - 1.0 / (2.0 * m));
    const double v = 1.0 / (1.0 - a);
    TimescaleConstants c;
    c.gain = (m - 1.0) / (m + 1.0) / 4.0;
    c.cos_coeff = b_const / 2.0 * (1.0 + 1.0 / m);
    c.kappa = (u + v) / 8.0;
    c.nu = 2.0 * v * b_const / (pi * (u + v));
    return c;
}

namespace detail {

inline const PathWeight& single_path(const BoundInputs& inp, const char* who)
{
    if (inp.paths.size() != 1) {
        throw std::invalid_argument(std::string(who) + ": requires exactly one path");
    }
    if (!(std::abs(1.0 - inp.paths[0].a) > 0.0)) {
        throw std::domain_error(std::string(who) + ": 1 - a must be non-zero");
    }
    return inp.paths[0];
}

} // namespace detail

inline double phi_wideband(const BoundInputs& inp)
{
    const auto& p = detail::single_path(inp, "phi_wideband");
    const double v = 1.0 / (1.0 - p.a);
    const double m = static_cast<double>(inp.m_symbols);
    return (pi * inp.fc_T * (1.0 + v) + inp.b_const * v) * m * inp.delta_a / (4.0 * pi);
}

inline double phi_doppler(const BoundInputs& inp)
{
    const auto& p = detail::single_path(inp, "phi_doppler");
    const double v = 1.0 / (1.0 - p.a);
    const double m = static_cast<double>(inp.m_symbols);
    return pi * inp.fc_T * (1.0 + v) * m * inp.delta_a / (4.0 * pi) + inp.b_const * v * m * p.a / (2.0 * pi);
}

// phi_doppler - phi_wideband written in terms of phi_wideband.
inline double phi_gap(const BoundInputs& inp, double phi_wideband_value)
{
    const auto& p = detail::single_path(inp, "phi_gap");
    const double v = 1.0 / (1.0 - p.a);
    const double m = static_cast<double>(inp.m_symbols);
    const double denom = pi * inp.fc_T * (1.0 + v) + inp.b_const * v;
    return inp.b_const * v * (m * p.a / (2.0 * pi) - phi_wideband_value / denom);
}

// Limit of phi_gap as fc T grows without bound.
inline double phi_gap_limit(const BoundInputs& inp)
{
    const auto& p = detail::single_path(inp, "phi_gap_limit");
    const double m = static_cast<double>(inp.m_symbols);
    return inp.b_const / (1.0 - p.a) * m * p.a / (2.0 * pi);
}

// Large-M wideband bound for one path.
inline double e_wideband(const BoundInputs& inp)
{
    const auto& p = detail::single_path(inp, "e_wideband");
    const double v = 1.0 / (1.0 - p.a);
    const double m = static_cast<double>(inp.m_symbols);
    const double base = pi * inp.fc_T * (1.0 + v);
    const double k = m * inp.delta_a / (4.0 * pi);
    const double c = std::cos(inp.b_const * inp.delta_gamma_s / (2.0 * inp.symbol_period_s));
    const double s = sinc((base + inp.b_const * v) * k) + sinc((base - inp.b_const * v) * k);
    return p.theta_sq * (1.0 + omega_bound_const / m) - 0.25 * p.theta_sq * c * c * s * s;
}

// Large-M Doppler bound for one path.
inline double e_doppler(const BoundInputs& inp)
{
    const auto& p = detail::single_path(inp, "e_doppler");
    const double v = 1.0 / (1.0 - p.a);
    const double m = static_cast<double>(inp.m_symbols);
    const double centre = pi * inp.fc_T * (1.0 + v) * m * inp.delta_a / (4.0 * pi);
    const double off = inp.b_const * v * m * p.a / (2.0 * pi);
    const double c = std::cos(inp.b_const * inp.delta_gamma_s / (2.0 * inp.symbol_period_s));
    const double s = sinc(centre + off) + sinc(centre - off);
    return p.theta_sq * (1.0 + omega_bound_const / m) - 0.25 * p.theta_sq * c * c * s * s;
}

/*
 * Smallest B in (0, pi] with cos(B x) <= sinc(x) on the lattice x = i/(2 samples), i = 1..samples.
 * Feasibility is monotone in B on this range, so bisection finds the boundary.
 */
inline double choose_b(int samples)
{
    if (samples < 10) {
        throw std::invalid_argument("choose_b: samples must be >= 10");
    }
    auto feasible = [samples](double b) {
        for (int i = 1; i <= samples; ++i) {
            const double x = 0.5 * i / samples;
            if (std::cos(b * x) > sinc(x) + 1e-15) {
                return false;
            }
        }
        return true;
    };
    double lo = 0.0;
    double hi = pi;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

// (1/M)||theta_hat d_hat - theta d||^2 = term1 - term2 + term3.
struct ErrorExpansion {
    double term1 = 0.0;
    double term2 = 0.0;
    double term3 = 0.0;
    double direct = 0.0;

    double combined() const { return term1 - term2 + term3; }
};

inline ErrorExpansion error_expansion(const cvec& d, const cvec& d_hat, cplx theta, cplx theta_hat, long m_symbols,
                                      double step_s)
{
    const double m = static_cast<double>(m_symbols);
    ErrorExpansion e;
    e.term1 = std::norm(theta_hat) * inner_product(d_hat, d_hat, step_s).real() / m;
    e.term2 = 2.0 * (theta_hat * std::conj(theta) * inner_product(d_hat, d, step_s)).real() / m;
    e.term3 = std::norm(theta) * inner_product(d, d, step_s).real() / m;
    const cvec diff = theta_hat * d_hat - theta * d;
    e.direct = inner_product(diff, diff, step_s).real() / m;
    return e;
}

/*
 * <s, s_hat> written as a double sum of ambiguity-function samples, the
 * phase ramp across each pulse pair frozen at the midpoint of the two peaks.
 * s is the wideband response at (gamma, a); s_hat uses (gamma_hat, a_hat)
 * under `kind`.
 */
inline cplx atom_inner_product_expansion(const SymbolSequence& b, const PulseSpec& spec, double fc_hz, double gamma,
                                         double a, double gamma_hat, double a_hat, ModelKind kind)
{
    const double T = spec.symbol_period_s;
    const long n0 = b.first_index();
    const long n = static_cast<long>(b.size());
    double beta;
    double shift;
    if (kind == ModelKind::wideband) {
        beta = (1.0 - a) / (1.0 - a_hat);
        shift = (1.0 - a_hat) * (gamma_hat - gamma);
    } else {
        beta = 1.0 - a;
        shift = gamma_hat - gamma;
    }
    const double ph0 = 2.0 * pi * fc_hz * ((1.0 - a_hat) * gamma_hat - (1.0 - a) * gamma);
    cplx acc(0.0, 0.0);
    for (long i = 0; i < n; ++i) {
        const long r = n0 + i;
        for (long j = 0; j < n; ++j) {
            const long q = n0 + j;
            const double lam = static_cast<double>(q) * T - static_cast<double>(r) * T / beta + shift;
            const double w = wideband_ambiguity(lam, beta, spec);
            if (w == 0.0) {
                continue;
            }
            const double t_hat = kind == ModelKind::wideband ? static_cast<double>(q) * T / (1.0 - a_hat) + gamma_hat
                                                             : static_cast<double>(q) * T + gamma_hat;
            const double t_true = static_cast<double>(r) * T / (1.0 - a) + gamma;
            const double ph = ph0 + 2.0 * pi * fc_hz * (a_hat - a) * 0.5 * (t_hat + t_true);
            acc += b.symbols[static_cast<std::size_t>(i)] * std::conj(b.symbols[static_cast<std::size_t>(j)])
                * cplx(std::cos(ph), std::sin(ph)) * w;
        }
    }
    return acc;
}

} // namespace wbce
