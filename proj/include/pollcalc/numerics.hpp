#pragma once

// Moments by numerical differentiation, LST inversion to CDFs and GF
// inversion to probability mass functions.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "taylor.hpp"

namespace pollcalc {

enum class TransformKind { Lst, Gf };

struct TransformFn {
    std::function<complex(complex)> evaluate;
    TransformKind kind = TransformKind::Lst;
    /// Typical size of the variable (its mean when known); sets step sizes.
    double scale = 1.0;
    /// P(X = 0) when known; otherwise the LST inversion extrapolates it.
    std::optional<double> mass_at_zero;

    complex operator()(complex x) const { return evaluate(x); }
};

struct DerivativeResult {
    double value = 0.0;
    double error = 0.0;
};

struct DifferentiationPolicy {
    double relative_step = 0.05;  ///< first step, in units of 1/scale (LST) or radians (GF)
    int levels = 5;               ///< step halvings in the extrapolation table
    double tolerance = 1e-5;      ///< extrapolation disagreement that counts as ill-conditioned
};

namespace detail {

/// Richardson table for an even expansion in h: rows h, h/2, h/4, ...
template <class F>
DerivativeResult richardson(F&& estimate, double h, int levels)
{
    std::vector<std::vector<double>> t(static_cast<std::size_t>(levels));
    for (int n = 0; n < levels; ++n) {
        auto& row = t[static_cast<std::size_t>(n)];
        row.push_back(estimate(h / std::ldexp(1.0, n)));
        double factor = 4.0;
        for (int m = 1; m <= n; ++m, factor *= 4.0) {
            const double fine = row[static_cast<std::size_t>(m - 1)];
            const double coarse = t[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(m - 1)];
            row.push_back(fine + (fine - coarse) / (factor - 1.0));
        }
    }
    const auto& last = t.back();
    const auto& prev = t[t.size() - 2];
    return {last.back(), std::abs(last.back() - prev.back())};
}

} // namespace detail

/// (-1)^order f^(order)(0) for an LST (moments), or the factorial moment
/// f^(order)(1) for a GF. Central differences along the imaginary axis
/// (LST) or the unit circle (GF), Richardson-extrapolated.
inline DerivativeResult derivative_at_zero_detailed(const TransformFn& f, int order,
                                                    const DifferentiationPolicy& policy = {})
{
    if (order != 1 && order != 2)
        throw Error(ErrorCode::Domain, "derivative order must be 1 or 2");
    if (policy.levels < 2)
        throw Error(ErrorCode::Domain, "need at least two extrapolation levels");
    const complex i1(0.0, 1.0);
    DerivativeResult r;
    if (f.kind == TransformKind::Lst) {
        const double h0 = policy.relative_step / f.scale;
        if (order == 1) {
            // f(ih) - f(-ih) = -2ih E(X) + O(h^3)
            r = detail::richardson([&](double h) { return ((f(-i1 * h) - f(i1 * h)) / (2.0 * i1 * h)).real(); }, h0,
                                   policy.levels);
        } else {
            const complex f0 = f(0.0);
            r = detail::richardson(
                [&](double h) { return ((2.0 * f0 - f(i1 * h) - f(-i1 * h)) / (h * h)).real(); }, h0, policy.levels);
        }
    } else {
        // phi(t) = f(e^{it}): phi'(0) = i f'(1), phi''(0) = -f'(1) - f''(1)
        const double h0 = policy.relative_step;
        auto phi = [&](double t) { return f(std::exp(i1 * t)); };
        const DerivativeResult d1 =
            detail::richardson([&](double h) { return ((phi(h) - phi(-h)) / (2.0 * h) / i1).real(); }, h0,
                               policy.levels);
        if (order == 1) {
            r = d1;
        } else {
            const complex p0 = phi(0.0);
            const DerivativeResult d2 = detail::richardson(
                [&](double h) { return ((phi(h) - 2.0 * p0 + phi(-h)) / (h * h)).real(); }, h0, policy.levels);
            r = {-d2.value - d1.value, d2.error + d1.error};
        }
    }
    if (r.error > policy.tolerance * std::max(1.0, std::abs(r.value)))
        throw Error(ErrorCode::IllConditioned, "derivative extrapolation disagrees by " + std::to_string(r.error));
    return r;
}

inline double derivative_at_zero(const TransformFn& f, int order, const DifferentiationPolicy& policy = {})
{
    return derivative_at_zero_detailed(f, order, policy).value;
}

struct InversionGrid {
    std::vector<double> abscissae;
    std::vector<double> values;
    std::vector<double> errors;
};

struct LstInversionPolicy {
    double damping = 23.0;   ///< A: discretization error about e^{-A}
    int terms = 40;          ///< partial sums in the Fourier series
    int euler_terms = 12;    ///< partial sums averaged by Euler summation
    double target = 1e-8;    ///< absolute error target
    bool strict = true;      ///< throw ACCURACY when the estimate exceeds the target
};

/// CDF values F(t) of the distribution with LST f, by Fourier-series
/// inversion of f(s)/s with Euler summation. F(0) is the limit of f along
/// the real axis, extrapolated from large arguments unless given.
inline InversionGrid invert_lst(const TransformFn& f, const std::vector<double>& t_grid,
                                const LstInversionPolicy& policy = {})
{
    if (f.kind != TransformKind::Lst)
        throw Error(ErrorCode::Domain, "invert_lst needs an LST");
    if (policy.euler_terms < 1 || policy.terms <= policy.euler_terms)
        throw Error(ErrorCode::Domain, "need more series terms than Euler terms");
    const double a = policy.damping;
    const int n = policy.terms - policy.euler_terms;
    const int m = policy.euler_terms;

    std::vector<double> binomial(static_cast<std::size_t>(m) + 1, 1.0);
    for (int k = 1; k <= m; ++k)
        binomial[static_cast<std::size_t>(k)] = binomial[static_cast<std::size_t>(k - 1)] * (m - k + 1) / k;
    const double norm = std::ldexp(1.0, -m);

    InversionGrid grid;
    for (double t : t_grid) {
        if (t < 0.0)
            throw Error(ErrorCode::Domain, "inversion points must be >= 0");
        grid.abscissae.push_back(t);
        if (t == 0.0 && f.mass_at_zero) {
            grid.values.push_back(*f.mass_at_zero);
            grid.errors.push_back(0.0);
            continue;
        }
        if (t == 0.0) {
            // f(w) = F(0) + c / w + ..., extrapolated in 1/w from two pairs
            const double w1 = 1e5 / f.scale, w2 = 1e6 / f.scale, w3 = 1e7 / f.scale;
            const double f1 = f(w1).real(), f2 = f(w2).real(), f3 = f(w3).real();
            const double coarse = (w2 * f2 - w1 * f1) / (w2 - w1);
            const double fine = (w3 * f3 - w2 * f2) / (w3 - w2);
            grid.values.push_back(fine);
            grid.errors.push_back(std::abs(fine - coarse));
            if (policy.strict && grid.errors.back() > policy.target)
                throw Error(ErrorCode::Accuracy, "LST limit at t = 0 has error estimate " +
                                                     std::to_string(grid.errors.back()));
            continue;
        }
        const double scale = std::exp(a / 2.0) / t;
        auto term = [&](int k) {
            const complex s((a / (2.0 * t)), k * std::numbers::pi / t);
            const complex v = f(s) / s;
            return (k % 2 == 0 ? 1.0 : -1.0) * v.real();
        };
        std::vector<double> partial(static_cast<std::size_t>(n + m) + 1);
        double acc = term(0) / 2.0;
        partial[0] = acc;
        for (int k = 1; k <= n + m; ++k) {
            acc += term(k);
            partial[static_cast<std::size_t>(k)] = acc;
        }
        auto euler = [&](int base) {
            double e = 0.0;
            for (int k = 0; k <= m; ++k)
                e += binomial[static_cast<std::size_t>(k)] * partial[static_cast<std::size_t>(base + k)];
            return scale * norm * e;
        };
        const double value = euler(n);
        const double error = std::abs(value - euler(n - 1)) + std::exp(-a) / (1.0 - std::exp(-a));
        grid.values.push_back(value);
        grid.errors.push_back(error);
        if (policy.strict && error > policy.target)
            throw Error(ErrorCode::Accuracy, "LST inversion at t = " + std::to_string(t) +
                                                 " has error estimate " + std::to_string(error));
    }
    return grid;
}

struct GfInversionPolicy {
    double aliasing = 1e-12;  ///< r^M bound on the aliasing error
    double radius = 0.0;      ///< overrides the radius when positive
    double mass_tolerance = 1e-8;
};

/// p_0 .. p_{n_max} from a GF by a discrete Fourier transform on a circle.
inline InversionGrid invert_gf(const TransformFn& f, int n_max, const GfInversionPolicy& policy = {})
{
    if (f.kind != TransformKind::Gf)
        throw Error(ErrorCode::Domain, "invert_gf needs a GF");
    if (n_max < 0)
        throw Error(ErrorCode::Domain, "n_max must be >= 0");
    const int points = 2 * (n_max + 1);
    const double r = policy.radius > 0.0 ? policy.radius : std::pow(policy.aliasing, 1.0 / points);
    if (!(r > 0.0 && r <= 1.0))
        throw Error(ErrorCode::Domain, "inversion radius must lie in (0, 1]");

    // real coefficients: f(conj z) = conj f(z), so half the circle suffices
    std::vector<complex> samples(static_cast<std::size_t>(points));
    for (int k = 0; k <= points / 2; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / points;
        samples[static_cast<std::size_t>(k)] = f(std::polar(r, angle));
        if (k > 0 && k < points - k)
            samples[static_cast<std::size_t>(points - k)] = std::conj(samples[static_cast<std::size_t>(k)]);
    }

    InversionGrid grid;
    const double aliasing = std::pow(r, points) / (1.0 - std::pow(r, points));
    double total = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        complex acc = 0.0;
        for (int k = 0; k < points; ++k)
            acc += samples[static_cast<std::size_t>(k)] *
                   std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(k) * n) % points) /
                                       points);
        const double p = acc.real() / (points * std::pow(r, n));
        grid.abscissae.push_back(n);
        grid.values.push_back(p);
        grid.errors.push_back(std::isfinite(aliasing) ? aliasing : 1.0);
        total += p;
    }
    if (total > 1.0 + policy.mass_tolerance)
        throw Error(ErrorCode::Accuracy, "inverted probabilities sum to " + std::to_string(total));
    return grid;
}

/// integral_0^T (1 - F(t)) dt by the trapezoid rule on an increasing grid.
inline double mean_from_cdf(const InversionGrid& cdf)
{
    double acc = 0.0;
    for (std::size_t k = 1; k < cdf.abscissae.size(); ++k)
        acc += 0.5 * (cdf.abscissae[k] - cdf.abscissae[k - 1]) * ((1.0 - cdf.values[k]) + (1.0 - cdf.values[k - 1]));
    return acc;
}

} // namespace pollcalc
