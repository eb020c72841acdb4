#pragma once

// Service and switch-over time distributions with closed-form transforms.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "error.hpp"
#include "taylor.hpp"

namespace pollcalc {

struct Deterministic {
    double value;
};

struct Exponential {
    double rate;
};

struct Erlang {
    int shape;
    double rate;
};

struct HyperExponential {
    std::vector<double> weights;
    std::vector<double> rates;
};

/// X | lower <= X < upper for X ~ Exp(rate); `upper` may be +infinity.
struct TruncatedExponential {
    double rate;
    double lower;
    double upper;
};

class Distribution;

struct Mixture {
    std::vector<double> weights;
    std::vector<Distribution> components;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit generator.
template <class Engine>
double uniform01(Engine& engine)
{
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

template <class Engine>
std::size_t pick(const std::vector<double>& weights, Engine& engine)
{
    double total = 0.0;
    for (double w : weights)
        total += w;
    double u = uniform01(engine) * total;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (u < weights[k])
            return k;
        u -= weights[k];
    }
    // rounding can leave u just above the last positive weight
    for (std::size_t k = weights.size(); k-- > 0;)
        if (weights[k] > 0.0)
            return k;
    return 0;
}

// Moments of Y ~ Exp(rate) conditioned on Y < width, scaled by rate^k.
inline double truncated_first_scaled(double u)
{
    if (u < 1e-4)
        return u / 2.0 - u * u / 12.0 + u * u * u * u / 720.0;
    return 1.0 - u / std::expm1(u);
}

inline double truncated_second_scaled(double u)
{
    if (u < 1e-4)
        return u * u / 3.0 - u * u * u / 12.0 + u * u * u * u / 360.0;
    return 2.0 - (u * u + 2.0 * u) / std::expm1(u);
}

} // namespace detail

class Distribution {
public:
    using Family = std::variant<Deterministic, Exponential, Erlang, HyperExponential, Mixture,
                                TruncatedExponential>;

    Distribution() : family_(Deterministic{0.0}) {}

    static Distribution deterministic(double value)
    {
        if (!(value >= 0.0) || !std::isfinite(value))
            throw Error(ErrorCode::BadShape, "deterministic value must be finite and >= 0");
        return Distribution(Deterministic{value});
    }

    static Distribution exponential(double rate)
    {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw Error(ErrorCode::BadShape, "exponential rate must be positive");
        return Distribution(Exponential{rate});
    }

    static Distribution erlang(int shape, double rate)
    {
        if (shape < 1 || !(rate > 0.0) || !std::isfinite(rate))
            throw Error(ErrorCode::BadShape, "erlang needs shape >= 1 and rate > 0");
        return Distribution(Erlang{shape, rate});
    }

    static Distribution hyperexponential(std::vector<double> weights, std::vector<double> rates)
    {
        if (weights.empty() || weights.size() != rates.size())
            throw Error(ErrorCode::BadShape, "hyperexponential needs matching weights and rates");
        check_weights(weights);
        for (double r : rates)
            if (!(r > 0.0) || !std::isfinite(r))
                throw Error(ErrorCode::BadShape, "hyperexponential rates must be positive");
        return Distribution(HyperExponential{std::move(weights), std::move(rates)});
    }

    /// Weights need not be normalized; they are divided by their sum.
    static Distribution mixture(std::vector<double> weights, std::vector<Distribution> components)
    {
        if (components.empty() || weights.size() != components.size())
            throw Error(ErrorCode::BadShape, "mixture needs matching weights and components");
        check_weights(weights);
        return Distribution(Mixture{std::move(weights), std::move(components)});
    }

    static Distribution truncated_exponential(double rate, double lower, double upper)
    {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw Error(ErrorCode::BadShape, "truncated exponential rate must be positive");
        if (!(lower >= 0.0) || !std::isfinite(lower) || !(upper > lower))
            throw Error(ErrorCode::BadShape, "truncated exponential needs 0 <= lower < upper");
        return Distribution(TruncatedExponential{rate, lower, upper});
    }

    const Family& family() const noexcept { return family_; }

    std::string_view family_name() const
    {
        static constexpr std::string_view names[] = {"deterministic",   "exponential", "erlang",
                                                     "hyperexponential", "mixture",
                                                     "truncated_exponential"};
        return names[family_.index()];
    }

    /// E[X^k] for k in {1, 2}.
    double moment(int k) const
    {
        if (k != 1 && k != 2)
            throw Error(ErrorCode::Domain, "only first and second moments are available");
        return std::visit([k](const auto& f) { return moment_of(f, k); }, family_);
    }

    double mean() const { return moment(1); }
    double second_moment() const { return moment(2); }

    /// E[exp(-w X)] for any scalar; callers are responsible for the domain.
    template <Scalar S>
    S lst(const S& w) const
    {
        return std::visit([&w](const auto& f) { return lst_of(f, w); }, family_);
    }

    /// Checked evaluation on the closed right half-plane.
    complex lst_eval(complex w) const
    {
        if (w.real() < 0.0)
            throw Error(ErrorCode::Domain, "LST argument must have Re >= 0");
        return lst(w);
    }

    template <class Engine>
    double sample(Engine& engine) const
    {
        return std::visit([&engine](const auto& f) { return sample_of(f, engine); }, family_);
    }

private:
    explicit Distribution(Family f) : family_(std::move(f)) {}

    static void check_weights(const std::vector<double>& weights)
    {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w))
                throw Error(ErrorCode::BadShape, "weights must be finite and >= 0");
            total += w;
        }
        if (!(total > 0.0))
            throw Error(ErrorCode::BadShape, "weights must not all be zero");
    }

    static double moment_of(const Deterministic& d, int k) { return k == 1 ? d.value : d.value * d.value; }
    static double moment_of(const Exponential& e, int k)
    {
        return k == 1 ? 1.0 / e.rate : 2.0 / (e.rate * e.rate);
    }
    static double moment_of(const Erlang& e, int k)
    {
        const double n = e.shape;
        return k == 1 ? n / e.rate : n * (n + 1.0) / (e.rate * e.rate);
    }
    static double moment_of(const HyperExponential& h, int k)
    {
        double total = 0.0, acc = 0.0;
        for (std::size_t j = 0; j < h.rates.size(); ++j) {
            total += h.weights[j];
            acc += h.weights[j] * (k == 1 ? 1.0 / h.rates[j] : 2.0 / (h.rates[j] * h.rates[j]));
        }
        return acc / total;
    }
    static double moment_of(const Mixture& m, int k)
    {
        double total = 0.0, acc = 0.0;
        for (std::size_t j = 0; j < m.components.size(); ++j) {
            total += m.weights[j];
            if (m.weights[j] > 0.0)
                acc += m.weights[j] * m.components[j].moment(k);
        }
        return acc / total;
    }
    static double moment_of(const TruncatedExponential& t, int k)
    {
        const double r = t.rate, a = t.lower;
        double y1, y2;
        if (std::isinf(t.upper)) {
            y1 = 1.0 / r;
            y2 = 2.0 / (r * r);
        } else {
            const double u = r * (t.upper - t.lower);
            y1 = detail::truncated_first_scaled(u) / r;
            y2 = detail::truncated_second_scaled(u) / (r * r);
        }
        return k == 1 ? a + y1 : a * a + 2.0 * a * y1 + y2;
    }

    template <Scalar S>
    static S lst_of(const Deterministic& d, const S& w)
    {
        return exp(w * (-d.value));
    }
    template <Scalar S>
    static S lst_of(const Exponential& e, const S& w)
    {
        return S(e.rate) / (w + e.rate);
    }
    template <Scalar S>
    static S lst_of(const Erlang& e, const S& w)
    {
        return ipow(S(e.rate) / (w + e.rate), e.shape);
    }
    template <Scalar S>
    static S lst_of(const HyperExponential& h, const S& w)
    {
        S acc(0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < h.rates.size(); ++j) {
            total += h.weights[j];
            acc += (S(h.weights[j] * h.rates[j]) / (w + h.rates[j]));
        }
        return acc * (1.0 / total);
    }
    template <Scalar S>
    static S lst_of(const Mixture& m, const S& w)
    {
        S acc(0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < m.components.size(); ++j) {
            total += m.weights[j];
            if (m.weights[j] > 0.0)
                acc += m.components[j].lst(w) * m.weights[j];
        }
        return acc * (1.0 / total);
    }
    template <Scalar S>
    static S lst_of(const TruncatedExponential& t, const S& w)
    {
        const double r = t.rate;
        S result = S(r) / (w + r);
        if (t.lower > 0.0)
            result = result * exp(w * (-t.lower));
        if (!std::isinf(t.upper)) {
            const double width = t.upper - t.lower;
            result = result * (expm1((w + r) * (-width)) * (1.0 / std::expm1(-r * width)));
        }
        return result;
    }

    template <class Engine>
    static double sample_of(const Deterministic& d, Engine&)
    {
        return d.value;
    }
    template <class Engine>
    static double sample_of(const Exponential& e, Engine& engine)
    {
        return -std::log1p(-detail::uniform01(engine)) / e.rate;
    }
    template <class Engine>
    static double sample_of(const Erlang& e, Engine& engine)
    {
        double acc = 0.0;
        for (int j = 0; j < e.shape; ++j)
            acc -= std::log1p(-detail::uniform01(engine));
        return acc / e.rate;
    }
    template <class Engine>
    static double sample_of(const HyperExponential& h, Engine& engine)
    {
        const std::size_t j = detail::pick(h.weights, engine);
        return -std::log1p(-detail::uniform01(engine)) / h.rates[j];
    }
    template <class Engine>
    static double sample_of(const Mixture& m, Engine& engine)
    {
        return m.components[detail::pick(m.weights, engine)].sample(engine);
    }
    template <class Engine>
    static double sample_of(const TruncatedExponential& t, Engine& engine)
    {
        const double u = detail::uniform01(engine);
        if (std::isinf(t.upper))
            return t.lower - std::log1p(-u) / t.rate;
        const double x = t.lower - std::log1p(u * std::expm1(-t.rate * (t.upper - t.lower))) / t.rate;
        return std::min(x, std::nextafter(t.upper, t.lower));
    }

    Family family_;
};

/// A band of an exponential distribution together with its probability mass.
struct TruncatedBand {
    Distribution distribution;
    double probability;
};

inline TruncatedBand truncate_exponential(double rate, double lower, double upper)
{
    if (!(upper > lower))
        throw Error(ErrorCode::BadShape, "band needs lower < upper");
    const double p = std::isinf(upper) ? std::exp(-rate * lower)
                                       : -std::exp(-rate * lower) * std::expm1(-rate * (upper - lower));
    if (p < 1e-12)
        throw Error(ErrorCode::EmptyBand, "band [" + std::to_string(lower) + ", " + std::to_string(upper) +
                                              ") has probability below 1e-12");
    if (lower == 0.0 && std::isinf(upper))
        return {Distribution::exponential(rate), 1.0};
    return {Distribution::truncated_exponential(rate, lower, upper), p};
}

struct FixedPointPolicy {
    double tolerance = 1e-13;
    int max_iterations = 100000;
    /// A step that has not shrunk for `stall_iterations` iterations is rounding
    /// noise when it is below this (high series coefficients never reach `tolerance`).
    double noise_floor = 1e-9;
    int stall_iterations = 50;
};

/// Busy-period LST pi(w) = base(w + rate (1 - pi(w))) by successive
/// substitution from pi = 0. After reaching `tolerance` the iteration keeps
/// going while the step still shrinks, so the result sits at rounding level.
template <Scalar S, class BaseLst>
S busy_period_fixed_point(const BaseLst& base_lst, double rate, const S& w, const FixedPointPolicy& policy = {})
{
    if (rate == 0.0)
        return base_lst(w);
    S pi(0.0);
    double last_step = std::numeric_limits<double>::infinity();
    double best_step = last_step;
    int since_best = 0;
    bool converged = false;
    for (int it = 0; it < policy.max_iterations; ++it) {
        S next = base_lst(w + (S(1.0) - pi) * rate);
        const double step = relative_deviation(next, pi);
        pi = next;
        if (step < best_step) {
            best_step = step;
            since_best = 0;
        } else if (++since_best >= policy.stall_iterations && best_step <= policy.noise_floor) {
            return pi;
        }
        if (!converged) {
            if (step <= policy.tolerance)
                converged = true;
        } else if (step >= last_step || step <= 4.0 * std::numeric_limits<double>::epsilon()) {
            return pi;
        }
        last_step = step;
    }
    if (converged)
        return pi;
    throw Error(ErrorCode::NoConvergence, "busy-period fixed point did not converge (load too close to 1?)");
}

struct BusyPeriodSpec {
    Distribution base;
    double rate;
};

template <Scalar S>
S busy_period(const BusyPeriodSpec& bp, const S& w, const FixedPointPolicy& policy = {})
{
    return busy_period_fixed_point([&bp](const S& x) { return bp.base.lst(x); }, bp.rate, w, policy);
}

inline complex busy_period_lst(const BusyPeriodSpec& bp, complex w, const FixedPointPolicy& policy = {})
{
    if (w.real() < 0.0)
        throw Error(ErrorCode::Domain, "busy-period LST argument must have Re >= 0");
    if (bp.rate < 0.0 || bp.rate * bp.base.mean() >= 1.0)
        throw Error(ErrorCode::Unstable, "busy period requires rate * E(B) < 1");
    return busy_period(bp, w, policy);
}

} // namespace pollcalc
