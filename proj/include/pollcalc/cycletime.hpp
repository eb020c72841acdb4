#pragma once

// Cycle-time and intervisit-time LSTs.
//
// theta_i is the time the server spends at Q_i per customer found there
// (beta_i gated, pi_i exhaustive) and psi_i(w) = w + lambda_i (1 - theta_i(w)).
// The chain psi_{i,j} = psi_{i+1}(psi_{i+1,j}), psi_{j,j} = w, runs backwards
// around the cycle from the anchor queue j.

#include <cstddef>
#include <vector>

#include "branching.hpp"
#include "error.hpp"
#include "model.hpp"
#include "taylor.hpp"

namespace pollcalc {

/// Visit time generated by one customer found at Q_i.
template <Scalar S>
S theta(const PollingSystem& sys, std::size_t i, const S& w, const FixedPointPolicy& policy = {})
{
    const ClassMix mix = sys.mix(i);
    if (sys.discipline(i) == Discipline::Exhaustive)
        return mix.busy_period(w, policy);
    return mix.lst(w);
}

template <Scalar S>
S psi(const PollingSystem& sys, std::size_t i, const S& w, const FixedPointPolicy& policy = {})
{
    if (sys.rate(i) == 0.0)
        return w;
    return w + (S(1.0) - theta(sys, i, w, policy)) * sys.rate(i);
}

/// psi_{i,anchor}(w) for every queue i, plus the full turn psi_{anchor+1}(psi_{anchor+1,anchor}(w)).
template <Scalar S>
struct PsiChain {
    std::vector<S> values;
    S full_turn;
};

template <Scalar S>
PsiChain<S> psi_chain(const PollingSystem& sys, std::size_t anchor, const S& w, const FixedPointPolicy& policy = {})
{
    const std::size_t n = sys.size();
    PsiChain<S> chain{std::vector<S>(n, w), w};
    std::size_t i = anchor;
    for (std::size_t step = 1; step < n; ++step) {
        const std::size_t prev = (i + n - 1) % n;
        chain.values[prev] = psi(sys, i, chain.values[i], policy);
        i = prev;
    }
    // i is now anchor + 1 (mod n)
    chain.full_turn = psi(sys, i, chain.values[i], policy);
    return chain;
}

namespace detail {

inline void require_cyclic(const PollingSystem& sys)
{
    if (sys.globally_gated())
        throw Error(ErrorCode::Unsupported, "visit-anchored cycle times need gated or exhaustive queues");
}

inline void require_queue(const PollingSystem& sys, std::size_t j)
{
    if (j >= sys.size())
        throw Error(ErrorCode::BadShape, "queue index out of range");
}

/// Arguments built as w - lambda (1 - beta(w)) can land a rounding error below zero.
inline constexpr double lst_domain_slack = 1e-12;

inline bool in_lst_domain(const complex& w)
{
    return w.real() >= -lst_domain_slack * std::max(1.0, std::abs(w));
}

template <Scalar S>
void require_lst_domain(const S& w)
{
    if (!in_lst_domain(value(w)))
        throw Error(ErrorCode::Domain, "LST argument must have Re >= 0");
}

} // namespace detail

/// Cycle starting at a visit beginning to Q_j, for globally gated systems
/// only j = 0 (the gate queue).
template <Scalar S>
ProductResult<S> cycle_lst_begin_diagnostic(const PollingSystem& sys, std::size_t j, const S& w,
                                            const TruncationPolicy& policy = {});

template <Scalar S>
ProductResult<S> globally_gated_cycle_lst_diagnostic(const PollingSystem& sys, S w,
                                                     const TruncationPolicy& policy = {})
{
    if (!sys.globally_gated())
        throw Error(ErrorCode::Unsupported, "delta-product cycle LST needs globally gated queues");
    detail::require_lst_domain(w);
    const int cap = detail::product_term_cap(sys.load(), policy);
    ProductResult<S> result{S(1.0), 0, 0.0};
    double last_gap = 1.0;
    for (int n = 0; n < cap; ++n) {
        S sigma(1.0);
        S delta(0.0);
        for (std::size_t i = 0; i < sys.size(); ++i) {
            sigma = sigma * sys.queue(i).switch_over.lst(w);
            delta += sys.mix(i).exponent(w);
        }
        result.value = result.value * sigma;
        result.terms = n + 1;
        const double gap = deviation_from_one(sigma);
        const bool stalled = gap <= policy.noise_floor && gap >= 0.99 * last_gap;
        last_gap = gap;
        if (n >= 1 && (gap <= policy.factor_tolerance || stalled)) {
            result.tail_bound = gap * sys.load() / (1.0 - sys.load());
            return result;
        }
        w = delta;
    }
    result.tail_bound = last_gap * sys.load() / (1.0 - sys.load());
    if (result.tail_bound > policy.max_tail)
        throw Error(ErrorCode::Truncation, "delta-product did not settle");
    return result;
}

template <Scalar S>
S globally_gated_cycle_lst(const PollingSystem& sys, const S& w, const TruncationPolicy& policy = {})
{
    return globally_gated_cycle_lst_diagnostic(sys, w, policy).value;
}

/// |gamma_1(w) - prod sigma_i(w) gamma_1(delta(w))|
inline double globally_gated_functional_residual(const PollingSystem& sys, complex w,
                                                 const TruncationPolicy& policy = {})
{
    complex sigma = 1.0, delta = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        sigma *= sys.queue(i).switch_over.lst(w);
        delta += sys.mix(i).exponent(w);
    }
    return std::abs(globally_gated_cycle_lst(sys, w, policy) - sigma * globally_gated_cycle_lst(sys, delta, policy));
}

template <Scalar S>
ProductResult<S> cycle_lst_begin_diagnostic(const PollingSystem& sys, std::size_t j, const S& w,
                                            const TruncationPolicy& policy)
{
    detail::require_queue(sys, j);
    if (sys.globally_gated()) {
        if (j != 0)
            throw Error(ErrorCode::Unsupported, "globally gated cycles start at the gate queue");
        return globally_gated_cycle_lst_diagnostic(sys, w, policy);
    }
    detail::require_lst_domain(w);
    const std::size_t n = sys.size();
    const PsiChain<S> chain = psi_chain(sys, (j + n - 1) % n, w, policy.fixed_point);
    S factor(1.0);
    GfVector<S> z(n, S(1.0));
    for (std::size_t i = 0; i < n; ++i) {
        factor = factor * sys.queue(i).switch_over.lst(chain.values[i]);
        z[i] = theta(sys, i, chain.values[i], policy.fixed_point);
    }
    ProductResult<S> result = visit_gf_diagnostic(sys, j, Epoch::Begin, std::move(z), policy);
    result.value = result.value * factor;
    return result;
}

template <Scalar S>
S cycle_lst_begin(const PollingSystem& sys, std::size_t j, const S& w, const TruncationPolicy& policy = {})
{
    return cycle_lst_begin_diagnostic(sys, j, w, policy).value;
}

/// Cycle between two successive visit completions at Q_j.
template <Scalar S>
ProductResult<S> cycle_lst_complete_diagnostic(const PollingSystem& sys, std::size_t j, const S& w,
                                               const TruncationPolicy& policy = {})
{
    detail::require_queue(sys, j);
    detail::require_cyclic(sys);
    detail::require_lst_domain(w);
    const std::size_t n = sys.size();
    const PsiChain<S> chain = psi_chain(sys, j, w, policy.fixed_point);
    S factor(1.0);
    GfVector<S> z(n, S(1.0));
    for (std::size_t i = 0; i < n; ++i) {
        factor = factor * sys.queue(i).switch_over.lst(i == j ? chain.full_turn : chain.values[i]);
        z[i] = theta(sys, i, chain.values[i], policy.fixed_point);
    }
    ProductResult<S> result = visit_gf_diagnostic(sys, j, Epoch::Complete, std::move(z), policy);
    result.value = result.value * factor;
    return result;
}

template <Scalar S>
S cycle_lst_complete(const PollingSystem& sys, std::size_t j, const S& w, const TruncationPolicy& policy = {})
{
    return cycle_lst_complete_diagnostic(sys, j, w, policy).value;
}

enum class IntervisitRoute { VisitBeginning, CycleCompletion };

/// Intervisit time of an exhaustive queue by a single route.
template <Scalar S>
S intervisit_lst(const PollingSystem& sys, std::size_t i, const S& w, IntervisitRoute route,
                 const TruncationPolicy& policy = {})
{
    detail::require_queue(sys, i);
    detail::require_cyclic(sys);
    if (sys.discipline(i) != Discipline::Exhaustive)
        throw Error(ErrorCode::Unsupported, "intervisit transform needs an exhaustive queue");
    detail::require_lst_domain(w);
    const double rate = sys.rate(i);
    if (rate == 0.0)
        return cycle_lst_complete(sys, i, w, policy);
    if (route == IntervisitRoute::VisitBeginning) {
        // type-i customers at a visit beginning are the arrivals of the intervisit period
        GfVector<S> z(sys.size(), S(1.0));
        z[i] = S(1.0) - w * (1.0 / rate);
        return visit_gf(sys, i, Epoch::Begin, z, policy);
    }
    const S shifted = w - sys.mix(i).exponent(w);
    if (!detail::in_lst_domain(value(shifted)))
        throw Error(ErrorCode::Domain, "cycle-completion route needs Re(w - lambda_i(1 - beta_i(w))) >= 0");
    return cycle_lst_complete(sys, i, shifted, policy);
}

inline constexpr double route_tolerance = 1e-8;

/// Intervisit LST with both routes compared wherever the second one is defined.
inline complex intervisit_lst(const PollingSystem& sys, std::size_t i, complex w, const TruncationPolicy& policy = {})
{
    const complex primary = intervisit_lst(sys, i, w, IntervisitRoute::VisitBeginning, policy);
    if (sys.rate(i) > 0.0 && (w - sys.mix(i).exponent(w)).real() >= 0.0) {
        const complex other = intervisit_lst(sys, i, w, IntervisitRoute::CycleCompletion, policy);
        if (std::abs(primary - other) > route_tolerance)
            throw Error(ErrorCode::RouteMismatch, "intervisit routes disagree by " +
                                                      std::to_string(std::abs(primary - other)));
    }
    return primary;
}

} // namespace pollcalc
