#pragma once

// Queue lengths at polling epochs as a multitype branching process with
// immigration: offspring and immigration generating functions, the
// infinite-product joint GF at the start of a cycle, and visit-epoch GFs.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "taylor.hpp"

namespace pollcalc {

enum class Epoch { Begin, Complete };

template <Scalar S>
using GfVector = std::vector<S>;

/// Per-queue, per-class GF arguments (outer index queue, inner index class).
template <Scalar S>
using PriorityGfVector = std::vector<std::vector<S>>;

struct TruncationPolicy {
    /// Stop multiplying once a factor is this close to 1.
    double factor_tolerance = 1e-15;
    /// Below this gap a factor that no longer shrinks is rounding noise.
    double noise_floor = 1e-12;
    /// Largest acceptable estimate of the neglected tail.
    double max_tail = 1e-10;
    FixedPointPolicy fixed_point{};
};

template <Scalar S>
struct ProductResult {
    S value;
    int terms = 0;
    double tail_bound = 0.0;
};

namespace detail {

/// Hard cap on the number of product factors for a contraction with ratio rho.
inline int product_term_cap(double rho, const TruncationPolicy& policy)
{
    if (rho <= 0.0)
        return 200;
    const double base = std::log(std::min(policy.factor_tolerance, 1e-14)) / std::log(rho);
    return static_cast<int>(std::min(4.0 * std::ceil(base) + 200.0, 5e6));
}

inline void check_gf_domain(const auto& z, std::size_t n)
{
    if (z.size() != n)
        throw Error(ErrorCode::BadShape, "GF argument has " + std::to_string(z.size()) + " entries, expected " +
                                             std::to_string(n));
    for (const auto& zj : z)
        if (value(zj).real() > 1.0 + 1e-12)
            throw Error(ErrorCode::Domain, "GF arguments must satisfy Re z <= 1");
}

template <Scalar S>
S arrival_exponent(const PollingSystem& sys, const GfVector<S>& z, std::size_t skip = static_cast<std::size_t>(-1))
{
    S acc(0.0);
    for (std::size_t j = 0; j < sys.size(); ++j)
        if (j != skip && sys.rate(j) > 0.0)
            acc += (S(1.0) - z[j]) * sys.rate(j);
    return acc;
}

/// h_i evaluated at an argument vector whose queue-level exponent is known.
template <Scalar S>
S replacement_gf(const PollingSystem& sys, std::size_t i, const GfVector<S>& z, const TruncationPolicy& policy)
{
    const ClassMix mix = sys.mix(i);
    switch (sys.discipline(i)) {
    case Discipline::Exhaustive:
        return mix.busy_period(arrival_exponent(sys, z, i), policy.fixed_point);
    case Discipline::Gated:
    case Discipline::GloballyGated:
        break;
    }
    return mix.lst(arrival_exponent(sys, z));
}

} // namespace detail

/// One generation: offspring vector f(z) and total immigration g(z).
template <Scalar S>
struct Generation {
    GfVector<S> offspring;
    S immigration;
};

template <Scalar S>
Generation<S> branching_step(const PollingSystem& sys, const GfVector<S>& z,
                             const TruncationPolicy& policy = {})
{
    const std::size_t n = sys.size();
    Generation<S> gen{GfVector<S>(n, S(1.0)), S(1.0)};

    if (sys.globally_gated()) {
        // every child waits for the next cycle
        const S exponent = detail::arrival_exponent(sys, z);
        for (std::size_t i = 0; i < n; ++i) {
            gen.offspring[i] = sys.mix(i).lst(exponent);
            gen.immigration = gen.immigration * sys.queue(i).switch_over.lst(exponent);
        }
        return gen;
    }

    // Downward recursion: f^(i) sees z_1..z_i and the offspring of queues after i.
    GfVector<S> arg = z;
    for (std::size_t i = n; i-- > 0;) {
        gen.offspring[i] = detail::replacement_gf(sys, i, arg, policy);
        gen.immigration = gen.immigration * sys.queue(i).switch_over.lst(detail::arrival_exponent(sys, arg));
        arg[i] = gen.offspring[i];
    }
    return gen;
}

template <Scalar S>
GfVector<S> offspring_gf(const PollingSystem& sys, const GfVector<S>& z, const TruncationPolicy& policy = {})
{
    detail::check_gf_domain(z, sys.size());
    return branching_step(sys, z, policy).offspring;
}

/// f^(i)(z) for a single queue.
template <Scalar S>
S offspring_gf(const PollingSystem& sys, std::size_t i, const GfVector<S>& z, const TruncationPolicy& policy = {})
{
    return offspring_gf(sys, z, policy).at(i);
}

template <Scalar S>
S immigration_gf(const PollingSystem& sys, const GfVector<S>& z, const TruncationPolicy& policy = {})
{
    detail::check_gf_domain(z, sys.size());
    return branching_step(sys, z, policy).immigration;
}

/// P_1(z) = prod_{n >= 0} g(f_n(z)), the joint queue-length GF at a visit
/// beginning to the first queue.
template <Scalar S>
ProductResult<S> cycle_start_gf_diagnostic(const PollingSystem& sys, GfVector<S> z,
                                           const TruncationPolicy& policy = {})
{
    detail::check_gf_domain(z, sys.size());
    const int cap = detail::product_term_cap(sys.load(), policy);
    ProductResult<S> result{S(1.0), 0, 0.0};
    double last_gap = 1.0;
    for (int n = 0; n < cap; ++n) {
        Generation<S> gen = branching_step(sys, z, policy);
        result.value = result.value * gen.immigration;
        result.terms = n + 1;
        const double gap = deviation_from_one(gen.immigration);
        const bool stalled = gap <= policy.noise_floor && gap >= 0.99 * last_gap;
        last_gap = gap;
        if (n >= 1 && (gap <= policy.factor_tolerance || stalled)) {
            result.tail_bound = last_gap * sys.load() / (1.0 - sys.load());
            return result;
        }
        z = std::move(gen.offspring);
    }
    result.tail_bound = last_gap * sys.load() / (1.0 - sys.load());
    if (result.tail_bound > policy.max_tail)
        throw Error(ErrorCode::Truncation, "cycle-start GF product did not settle within " + std::to_string(cap) +
                                               " terms (tail bound " + std::to_string(result.tail_bound) + ")");
    return result;
}

template <Scalar S>
S cycle_start_gf(const PollingSystem& sys, const GfVector<S>& z, const TruncationPolicy& policy = {})
{
    return cycle_start_gf_diagnostic(sys, z, policy).value;
}

/// V_{b_i}(z) (Begin) or V_{c_i}(z) (Complete). Globally gated systems only
/// expose the cycle start, i = 0 with Epoch::Begin.
template <Scalar S>
ProductResult<S> visit_gf_diagnostic(const PollingSystem& sys, std::size_t i, Epoch epoch, GfVector<S> z,
                                     const TruncationPolicy& policy = {})
{
    detail::check_gf_domain(z, sys.size());
    if (i >= sys.size())
        throw Error(ErrorCode::BadShape, "queue index out of range");
    if (sys.globally_gated() && (i != 0 || epoch != Epoch::Begin))
        throw Error(ErrorCode::Unsupported, "globally gated systems expose only the cycle-start GF");

    if (epoch == Epoch::Complete)
        z[i] = detail::replacement_gf(sys, i, z, policy);

    S factor(1.0);
    for (std::size_t m = i; m-- > 0;) {
        factor = factor * sys.queue(m).switch_over.lst(detail::arrival_exponent(sys, z));
        z[m] = detail::replacement_gf(sys, m, z, policy);
    }
    ProductResult<S> start = cycle_start_gf_diagnostic(sys, std::move(z), policy);
    start.value = start.value * factor;
    return start;
}

template <Scalar S>
S visit_gf(const PollingSystem& sys, std::size_t i, Epoch epoch, const GfVector<S>& z,
           const TruncationPolicy& policy = {})
{
    return visit_gf_diagnostic(sys, i, epoch, z, policy).value;
}

/// Collapse class-level arguments to queue level by rate-weighted averages.
template <Scalar S>
GfVector<S> collapse_priority_arguments(const PollingSystem& sys, const PriorityGfVector<S>& z)
{
    if (z.size() != sys.size())
        throw Error(ErrorCode::BadShape, "priority GF argument has the wrong number of queues");
    GfVector<S> out(sys.size(), S(1.0));
    for (std::size_t j = 0; j < sys.size(); ++j) {
        const auto& classes = sys.queue(j).classes;
        if (z[j].size() != classes.size())
            throw Error(ErrorCode::BadShape, "priority GF argument has the wrong number of classes");
        const double rate = sys.rate(j);
        S acc(0.0);
        for (std::size_t k = 0; k < classes.size(); ++k)
            acc += z[j][k] * (rate > 0.0 ? classes[k].rate / rate : 1.0 / static_cast<double>(classes.size()));
        out[j] = acc;
    }
    return out;
}

/// Joint GF over every (queue, class) pair at a visit epoch.
template <Scalar S>
S priority_visit_gf(const PollingSystem& sys, std::size_t i, Epoch epoch, const PriorityGfVector<S>& z,
                    const TruncationPolicy& policy = {})
{
    return visit_gf(sys, i, epoch, collapse_priority_arguments(sys, z), policy);
}

} // namespace pollcalc
