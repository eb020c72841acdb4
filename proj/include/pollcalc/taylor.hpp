#pragma once

// Scalar types shared by every transform evaluator.
//
// Transforms are written once as templates over a scalar `S`, which is either
// `std::complex<double>` (plain evaluation) or `Taylor<M>` (a truncated power
// series in the transform argument). Evaluating a transform at
// `Taylor<M>::variable(0)` yields its exact Taylor coefficients at the origin,
// which is how moments and removable singularities are handled.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <type_traits>

namespace pollcalc {

using complex = std::complex<double>;

inline complex exp(const complex& z) { return std::exp(z); }

/// e^z - 1 without cancellation for small |z|.
inline complex expm1(const complex& z)
{
    const double half_sin = std::sin(0.5 * z.imag());
    return {std::expm1(z.real()) * std::cos(z.imag()) - 2.0 * half_sin * half_sin,
            std::exp(z.real()) * std::sin(z.imag())};
}

/// Truncated power series sum_k c_k eps^k with complex coefficients.
///
/// `order()` is the highest coefficient that is still exact; it drops by one
/// each time a removable 0/0 quotient is resolved.
template <int MaxOrder>
class Taylor {
    static_assert(MaxOrder >= 1);

public:
    static constexpr int max_order = MaxOrder;

    constexpr Taylor() = default;
    Taylor(double v) : c_{} { c_[0] = v; }
    Taylor(complex v) : c_{} { c_[0] = v; }

    /// The expansion variable itself, centred at `at`.
    static Taylor variable(complex at = 0.0)
    {
        Taylor t(at);
        t.c_[1] = 1.0;
        return t;
    }

    const complex& operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
    complex& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }

    int order() const noexcept { return order_; }
    complex value() const { return c_[0]; }

    /// Sum of the exact coefficients at offset `h` from the expansion point.
    complex evaluate(complex h) const
    {
        complex acc = 0.0;
        for (int k = order_; k >= 0; --k)
            acc = acc * h + c_[static_cast<std::size_t>(k)];
        return acc;
    }

    /// Drop the constant term and divide by the expansion variable.
    Taylor shifted() const
    {
        Taylor r;
        for (int k = 0; k < MaxOrder; ++k)
            r.c_[static_cast<std::size_t>(k)] = c_[static_cast<std::size_t>(k + 1)];
        r.order_ = std::max(order_ - 1, 0);
        return r;
    }

    Taylor operator-() const
    {
        Taylor r = *this;
        for (auto& c : r.c_)
            c = -c;
        return r;
    }

    Taylor& operator+=(const Taylor& o)
    {
        for (int k = 0; k <= MaxOrder; ++k)
            c_[k] += o.c_[k];
        order_ = std::min(order_, o.order_);
        return *this;
    }
    Taylor& operator-=(const Taylor& o)
    {
        for (int k = 0; k <= MaxOrder; ++k)
            c_[k] -= o.c_[k];
        order_ = std::min(order_, o.order_);
        return *this;
    }
    Taylor& operator*=(const Taylor& o)
    {
        std::array<complex, MaxOrder + 1> r{};
        for (int n = 0; n <= MaxOrder; ++n)
            for (int k = 0; k <= n; ++k)
                r[n] += c_[k] * o.c_[n - k];
        c_ = r;
        order_ = std::min(order_, o.order_);
        return *this;
    }
    Taylor& operator/=(const Taylor& o)
    {
        std::array<complex, MaxOrder + 1> q{};
        for (int n = 0; n <= MaxOrder; ++n) {
            complex acc = c_[n];
            for (int k = 1; k <= n; ++k)
                acc -= o.c_[k] * q[n - k];
            q[n] = acc / o.c_[0];
        }
        c_ = q;
        order_ = std::min(order_, o.order_);
        return *this;
    }

    friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
    friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
    friend Taylor operator*(Taylor a, const Taylor& b) { return a *= b; }
    friend Taylor operator/(Taylor a, const Taylor& b) { return a /= b; }

    friend Taylor operator*(Taylor a, double s)
    {
        for (auto& c : a.c_)
            c *= s;
        return a;
    }
    friend Taylor operator*(double s, Taylor a) { return a * s; }
    friend Taylor operator*(Taylor a, complex s)
    {
        for (auto& c : a.c_)
            c *= s;
        return a;
    }
    friend Taylor operator*(complex s, Taylor a) { return a * s; }

    friend Taylor exp(const Taylor& a)
    {
        Taylor r = exp_of_tail(a);
        const complex e0 = std::exp(a.c_[0]);
        for (auto& c : r.c_)
            c *= e0;
        return r;
    }

    friend Taylor expm1(const Taylor& a)
    {
        Taylor r = exp_of_tail(a);
        const complex e0 = std::exp(a.c_[0]);
        for (auto& c : r.c_)
            c *= e0;
        r.c_[0] = pollcalc::expm1(a.c_[0]);
        return r;
    }

private:
    // exp(a - a[0]) via the recurrence n E_n = sum_k k a_k E_{n-k}.
    static Taylor exp_of_tail(const Taylor& a)
    {
        Taylor e;
        e.c_[0] = 1.0;
        for (int n = 1; n <= MaxOrder; ++n) {
            complex acc = 0.0;
            for (int k = 1; k <= n; ++k)
                acc += static_cast<double>(k) * a.c_[k] * e.c_[n - k];
            e.c_[n] = acc / static_cast<double>(n);
        }
        e.order_ = a.order_;
        return e;
    }

    std::array<complex, MaxOrder + 1> c_{};
    int order_ = MaxOrder;
};

template <class T>
struct is_taylor : std::false_type {};
template <int M>
struct is_taylor<Taylor<M>> : std::true_type {};

template <class S>
concept Scalar = std::same_as<S, complex> || is_taylor<S>::value;

inline complex value(const complex& z) { return z; }
template <int M>
complex value(const Taylor<M>& t)
{
    return t.value();
}

inline double deviation(const complex& a, const complex& b) { return std::abs(a - b); }
template <int M>
double deviation(const Taylor<M>& a, const Taylor<M>& b)
{
    const int order = std::min(a.order(), b.order());
    double d = 0.0;
    for (int k = 0; k <= order; ++k)
        d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

/// Coefficient-wise difference relative to max(1, |a_k|, |b_k|).
inline double relative_deviation(const complex& a, const complex& b)
{
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}
template <int M>
double relative_deviation(const Taylor<M>& a, const Taylor<M>& b)
{
    const int order = std::min(a.order(), b.order());
    double d = 0.0;
    for (int k = 0; k <= order; ++k)
        d = std::max(d, relative_deviation(a[k], b[k]));
    return d;
}

template <Scalar S>
double deviation_from_one(const S& x)
{
    return deviation(x, S(1.0));
}

/// Quotient whose numerator and denominator both vanish at the origin.
/// Plain division for complex scalars; for series the common zero is cancelled.
inline complex removable_div(const complex& num, const complex& den) { return num / den; }
template <int M>
Taylor<M> removable_div(Taylor<M> num, Taylor<M> den)
{
    auto scale = [](const Taylor<M>& t) {
        double s = 0.0;
        for (int k = 1; k <= t.order(); ++k)
            s += std::abs(t[k]);
        return s;
    };
    while (den.order() > 0 && std::abs(den[0]) <= 1e-12 * scale(den)) {
        num = num.shifted();
        den = den.shifted();
    }
    return num / den;
}

template <Scalar S>
S ipow(S base, int n)
{
    S result(1.0);
    while (n > 0) {
        if (n & 1)
            result = result * base;
        base = base * base;
        n >>= 1;
    }
    return result;
}

} // namespace pollcalc
