#pragma once

// Waiting-time LSTs and means per priority class, the marginal queue-length
// GF and the pseudo-conservation law.
//
// Notation for class k of queue i: H are the classes before k in the same
// queue, L the classes after it.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cycletime.hpp"
#include "error.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "taylor.hpp"

namespace pollcalc {

struct ClassView {
    ClassMix higher;
    ClassMix self;
    ClassMix lower;
};

inline ClassView class_view(const PollingSystem& sys, std::size_t i, std::size_t k)
{
    if (i >= sys.size() || k >= sys.classes(i))
        throw Error(ErrorCode::BadShape, "class index out of range");
    return {sys.higher(i, k), sys.only(i, k), sys.lower(i, k)};
}

inline constexpr double form_tolerance = 1e-9;
inline constexpr double mean_form_tolerance = 1e-8;

/// Largest |w| E(C) at which a complex argument is evaluated through the
/// series around the origin instead of the closed form.
inline constexpr double series_radius = 1e-4;

using SeriesJet = Taylor<8>;

namespace detail {

/// Evaluate `f` at w; near the origin the closed forms are 0/0, so complex
/// arguments there go through the power series instead.
template <Scalar S, class F>
S near_origin_safe(const PollingSystem& sys, const S& w, F&& f)
{
    if constexpr (std::is_same_v<S, complex>) {
        if (w == 0.0 || std::abs(w) * sys.cycle_mean() < series_radius)
            return f(SeriesJet::variable(0.0)).evaluate(w);
    }
    return f(w);
}

template <Scalar S>
void check_forms(const S& a, const S& b, const char* what)
{
    const double d = relative_deviation(a, b);
    if (d > form_tolerance)
        throw Error(ErrorCode::FormMismatch, std::string(what) + " forms disagree by " + std::to_string(d));
}

template <Scalar S>
S gated_class_lst(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w, const TruncationPolicy& policy)
{
    const ClassView v = class_view(sys, i, k);
    const double ec = sys.cycle_mean();
    const double rho_k = v.self.load();
    const S a = v.higher.exponent(w);
    const S b = v.self.exponent(w);
    const S num = cycle_lst_begin(sys, i, a + b, policy) - cycle_lst_begin(sys, i, w + a, policy);
    const S den = w - b;
    const S direct = removable_div(num, den * ec);

    // M/G/1 factor times the vacation factor
    const S mg1 = removable_div(w * (1.0 - rho_k), den);
    const S vacation = removable_div(num, w * ((1.0 - rho_k) * ec));
    check_forms(direct, mg1 * vacation, "gated priority waiting-time");
    return direct;
}

/// Compact (Kella-Yechiali) and decomposed forms of an exhaustive class's
/// waiting-time LST. Preemptive resume has only the decomposed form.
template <Scalar S>
struct ExhaustiveForms {
    S compact;
    S decomposed;
    bool has_compact;
};

template <Scalar S>
ExhaustiveForms<S> exhaustive_forms(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w,
                                    const TruncationPolicy& policy)
{
    const ClassView v = class_view(sys, i, k);
    const bool preemptive = sys.queue(i).preemption == Preemption::PreemptiveResume;
    const double ec = sys.cycle_mean();
    const double rho_i = sys.load(i);
    const double rho_h = v.higher.load();
    const double rho_k = v.self.load();
    const double rho_l = v.lower.load();
    const double e_i = (1.0 - rho_i) * ec;
    const double free = 1.0 - rho_h - rho_k;

    const S pi_h = v.higher.empty() ? S(1.0) : v.higher.busy_period(w, policy.fixed_point);
    const S u = v.higher.empty() ? w : w + (S(1.0) - pi_h) * v.higher.rate();
    const S one_minus_i = S(1.0) - intervisit_lst(sys, i, u, IntervisitRoute::VisitBeginning, policy);
    const S lower_exp = v.lower.exponent(u);
    const S den = w - v.self.exponent(u);

    // M/G/1 with completion times, vacations I*_i or B*_L, and H busy periods
    const double rho_star = rho_k / (1.0 - rho_h);
    const S mg1 = removable_div(w * (1.0 - rho_star), den);
    S bracket = removable_div(one_minus_i, u * e_i) * ((1.0 - rho_i) / free);
    if (preemptive)
        bracket += S(rho_l / free);
    else if (!v.lower.empty())
        bracket += removable_div(lower_exp, u) * (1.0 / free);
    S busy = S(1.0 - rho_h);
    if (!v.higher.empty()) {
        const double e_bp = v.higher.mean_service() / (1.0 - rho_h);
        busy += removable_div(S(1.0) - pi_h, w * e_bp) * rho_h;
    }
    const S decomposed = mg1 * bracket * busy;
    if (preemptive)
        return {decomposed, decomposed, false};
    return {removable_div(one_minus_i * (1.0 / ec) + lower_exp, den), decomposed, true};
}

template <Scalar S>
S exhaustive_class_lst(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w,
                       const TruncationPolicy& policy)
{
    const ExhaustiveForms<S> f = exhaustive_forms(sys, i, k, w, policy);
    if (f.has_compact)
        check_forms(f.compact, f.decomposed, "exhaustive priority waiting-time");
    return f.compact;
}

template <Scalar S>
S globally_gated_class_lst(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w,
                           const TruncationPolicy& policy)
{
    const ClassView v = class_view(sys, i, k);
    S prefix_sigma(1.0);
    S prefix(0.0);
    for (std::size_t j = 0; j < i; ++j) {
        prefix_sigma = prefix_sigma * sys.queue(j).switch_over.lst(w);
        prefix += sys.mix(j).exponent(w);
    }
    const S a = prefix + v.higher.exponent(w);
    const S b = v.self.exponent(w);
    const S num = globally_gated_cycle_lst(sys, a + b, policy) - globally_gated_cycle_lst(sys, w + a, policy);
    return prefix_sigma * removable_div(num, (w - b) * sys.cycle_mean());
}

} // namespace detail

template <Scalar S>
S waiting_lst_gated_priority(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w,
                             const TruncationPolicy& policy = {})
{
    if (sys.discipline(i) != Discipline::Gated)
        throw Error(ErrorCode::Unsupported, "queue is not gated");
    detail::require_lst_domain(w);
    return detail::near_origin_safe(sys, w, [&](const auto& x) { return detail::gated_class_lst(sys, i, k, x, policy); });
}

template <Scalar S>
S waiting_lst_exhaustive_priority(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w,
                                  const TruncationPolicy& policy = {})
{
    if (sys.discipline(i) != Discipline::Exhaustive)
        throw Error(ErrorCode::Unsupported, "queue is not exhaustive");
    detail::require_lst_domain(w);
    return detail::near_origin_safe(sys, w,
                                    [&](const auto& x) { return detail::exhaustive_class_lst(sys, i, k, x, policy); });
}

template <Scalar S>
S waiting_lst_globally_gated(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w,
                             const TruncationPolicy& policy = {})
{
    if (!sys.globally_gated())
        throw Error(ErrorCode::Unsupported, "system is not globally gated");
    detail::require_lst_domain(w);
    return detail::near_origin_safe(
        sys, w, [&](const auto& x) { return detail::globally_gated_class_lst(sys, i, k, x, policy); });
}

/// Waiting-time LST of class k of queue i under the queue's own discipline.
template <Scalar S>
S waiting_lst(const PollingSystem& sys, std::size_t i, std::size_t k, const S& w, const TruncationPolicy& policy = {})
{
    switch (sys.discipline(i)) {
    case Discipline::Gated: return waiting_lst_gated_priority(sys, i, k, w, policy);
    case Discipline::Exhaustive: return waiting_lst_exhaustive_priority(sys, i, k, w, policy);
    case Discipline::GloballyGated: return waiting_lst_globally_gated(sys, i, k, w, policy);
    }
    throw Error(ErrorCode::Unsupported, "unknown discipline");
}

/// Waiting time of an arbitrary customer of queue i under FCFS (all classes
/// of the queue merged).
template <Scalar S>
S waiting_lst_nonpriority(const PollingSystem& sys, std::size_t i, const S& w, const TruncationPolicy& policy = {})
{
    detail::require_queue(sys, i);
    detail::require_lst_domain(w);
    return detail::near_origin_safe(sys, w, [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const ClassMix mix = sys.mix(i);
        const double ec = sys.cycle_mean();
        const double rho_i = mix.load();
        const T b = mix.exponent(x);
        const T mg1 = removable_div(x * (1.0 - rho_i), x - b);
        switch (sys.discipline(i)) {
        case Discipline::Gated: {
            const T num = cycle_lst_begin(sys, i, b, policy) - cycle_lst_begin(sys, i, x, policy);
            return mg1 * removable_div(num, x * ((1.0 - rho_i) * ec));
        }
        case Discipline::Exhaustive: {
            const T rest = T(1.0) - intervisit_lst(sys, i, x, IntervisitRoute::VisitBeginning, policy);
            return mg1 * removable_div(rest, x * ((1.0 - rho_i) * ec));
        }
        case Discipline::GloballyGated: break;
        }
        T prefix_sigma(1.0);
        T prefix(0.0);
        for (std::size_t j = 0; j < i; ++j) {
            prefix_sigma = prefix_sigma * sys.queue(j).switch_over.lst(x);
            prefix += sys.mix(j).exponent(x);
        }
        const T num = globally_gated_cycle_lst(sys, prefix + b, policy) - globally_gated_cycle_lst(sys, x + prefix, policy);
        return prefix_sigma * removable_div(num, (x - b) * ec);
    });
}

/// Exhaustive FCFS waiting time through the residual of C*_i; real w >= 0 only.
inline complex waiting_lst_exhaustive_residual_cycle(const PollingSystem& sys, std::size_t i, double w,
                                                     const TruncationPolicy& policy = {})
{
    if (sys.discipline(i) != Discipline::Exhaustive)
        throw Error(ErrorCode::Unsupported, "queue is not exhaustive");
    if (w < 0.0)
        throw Error(ErrorCode::Domain, "residual-cycle form needs real w >= 0");
    return detail::near_origin_safe(sys, complex(w), [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const T s = x - sys.mix(i).exponent(x);
        return removable_div(T(1.0) - cycle_lst_complete(sys, i, s, policy), s * sys.cycle_mean());
    });
}

/// Exhaustive priority waiting time through the residual of C*_i, any class; real w >= 0.
inline complex waiting_lst_exhaustive_cycle_form(const PollingSystem& sys, std::size_t i, std::size_t k, double w,
                                                 const TruncationPolicy& policy = {})
{
    if (sys.discipline(i) != Discipline::Exhaustive || sys.queue(i).preemption != Preemption::Nonpreemptive)
        throw Error(ErrorCode::Unsupported, "cycle form covers nonpreemptive exhaustive queues");
    if (w < 0.0)
        throw Error(ErrorCode::Domain, "cycle form needs real w >= 0");
    const ClassView v = class_view(sys, i, k);
    return detail::near_origin_safe(sys, complex(w), [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const T u = v.higher.empty() ? x : x + (T(1.0) - v.higher.busy_period(x, policy.fixed_point)) * v.higher.rate();
        const T den = x - v.self.exponent(u);
        const T lower = v.lower.exponent(u);
        const T cycle = T(1.0) - cycle_lst_complete(sys, i, den - lower, policy);
        return removable_div(cycle, den * sys.cycle_mean()) + removable_div(lower, den);
    });
}

/// Residual C*_i transform E[exp(-s C*_res)] = (1 - gamma*_i(s)) / (s E(C)).
template <Scalar S>
S residual_complete_cycle_lst(const PollingSystem& sys, std::size_t i, const S& s, const TruncationPolicy& policy = {})
{
    detail::require_lst_domain(s);
    return detail::near_origin_safe(sys, s, [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        return removable_div(T(1.0) - cycle_lst_complete(sys, i, x, policy), x * sys.cycle_mean());
    });
}

/// E[z^L_ik] at an arbitrary epoch.
template <Scalar S>
S marginal_queue_length_gf(const PollingSystem& sys, std::size_t i, std::size_t k, const S& z,
                           const TruncationPolicy& policy = {})
{
    const ClassView v = class_view(sys, i, k);
    if (value(z).real() > 1.0 + 1e-12)
        throw Error(ErrorCode::Domain, "GF argument must satisfy Re z <= 1");
    const S w = (S(1.0) - z) * v.self.rate();
    S service = v.self.lst(w);
    if (sys.queue(i).preemption == Preemption::PreemptiveResume && !v.higher.empty())
        service = v.self.lst(w + (S(1.0) - v.higher.busy_period(w, policy.fixed_point)) * v.higher.rate());
    return waiting_lst(sys, i, k, w, policy) * service;
}

/// Closed-form mean waiting times, driven by cached cycle moments.
class MeanWaiting {
public:
    explicit MeanWaiting(const PollingSystem& sys, const TruncationPolicy& policy = {})
        : MeanWaiting(sys, cycle_moments(sys, policy))
    {
    }

    /// `moments` may come from any system with the same queue-level aggregates.
    MeanWaiting(const PollingSystem& sys, CycleMoments moments) : sys_(&sys), moments_(std::move(moments)) {}

    const CycleMoments& moments() const noexcept { return moments_; }

    /// E(C_i,res) (begin-anchored; the gate queue for globally gated systems)
    double residual_cycle(std::size_t i) const
    {
        const std::size_t j = sys_->globally_gated() ? 0 : i;
        return moments_.begin.at(j).second / (2.0 * sys_->cycle_mean());
    }

    double operator()(std::size_t i, std::size_t k) const
    {
        const ClassView v = class_view(*sys_, i, k);
        const double ec = sys_->cycle_mean();
        const double rho_h = v.higher.load();
        const double rho_k = v.self.load();
        switch (sys_->discipline(i)) {
        case Discipline::Gated: return (1.0 + 2.0 * rho_h + rho_k) * residual_cycle(i);
        case Discipline::GloballyGated: {
            double prefix_switch = 0.0, prefix_load = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                prefix_switch += sys_->queue(j).switch_over.mean();
                prefix_load += sys_->load(j);
            }
            return prefix_switch + (1.0 + 2.0 * prefix_load + 2.0 * rho_h + rho_k) * residual_cycle(0);
        }
        case Discipline::Exhaustive: break;
        }

        const bool preemptive = sys_->queue(i).preemption == Preemption::PreemptiveResume;
        const double rho_i = sys_->load(i);
        const double denom = (1.0 - rho_h) * (1.0 - rho_h - rho_k);
        const double lower_work = 0.5 * v.lower.rate_second_moment();
        double work = 0.5 * sys_->mix(i).rate_second_moment();
        if (preemptive)
            work -= lower_work;
        const auto& intervisit = moments_.intervisit.at(i);
        if (!intervisit)
            throw Error(ErrorCode::Unsupported, "missing intervisit moments");
        const double by_intervisit = (work + intervisit->second / (2.0 * ec)) / denom;

        double by_cycle = (1.0 - rho_i) * (1.0 - rho_i) * moments_.complete.at(i).second / (2.0 * ec) / denom;
        if (preemptive)
            by_cycle -= lower_work / denom;
        if (std::abs(by_intervisit - by_cycle) > mean_form_tolerance * std::max(1.0, std::abs(by_intervisit)))
            throw Error(ErrorCode::FormMismatch, "exhaustive mean waiting-time forms disagree by " +
                                                     std::to_string(std::abs(by_intervisit - by_cycle)));
        return by_intervisit;
    }

    /// Mean sojourn time; a preempted customer's service stretches to its completion time.
    double sojourn(std::size_t i, std::size_t k) const
    {
        const ClassView v = class_view(*sys_, i, k);
        double service = v.self.mean_service();
        if (sys_->queue(i).preemption == Preemption::PreemptiveResume)
            service /= 1.0 - v.higher.load();
        return (*this)(i, k) + service;
    }

    /// sum_k (lambda_ik / lambda_i) E(W_ik)
    double queue_mean(std::size_t i) const
    {
        const double rate = sys_->rate(i);
        if (rate == 0.0)
            return 0.0;
        double acc = 0.0;
        for (std::size_t k = 0; k < sys_->classes(i); ++k) {
            const double r = sys_->priority_class(i, k).rate;
            if (r > 0.0)
                acc += r / rate * (*this)(i, k);
        }
        return acc;
    }

private:
    const PollingSystem* sys_;
    CycleMoments moments_;
};

inline double mean_waiting(const PollingSystem& sys, std::size_t i, std::size_t k, const TruncationPolicy& policy = {})
{
    return MeanWaiting(sys, policy)(i, k);
}

/// Amount of work left behind at a visit completion, E(Z_ii).
inline double left_behind_work(const PollingSystem& sys, std::size_t i)
{
    const double rho_i = sys.load(i);
    switch (sys.discipline(i)) {
    case Discipline::Gated: return rho_i * rho_i * sys.cycle_mean();
    case Discipline::Exhaustive: return 0.0;
    case Discipline::GloballyGated: break;
    }
    double loads = 0.0, switches = 0.0;
    for (std::size_t j = 0; j <= i; ++j)
        loads += sys.load(j);
    for (std::size_t j = 0; j < i; ++j)
        switches += sys.queue(j).switch_over.mean();
    return rho_i * (sys.cycle_mean() * loads + switches);
}

/// Right-hand side of the pseudo-conservation law.
inline double conserved_work(const PollingSystem& sys)
{
    const Aggregates& agg = sys.aggregates();
    const double rho = agg.load;
    double service_term = 0.0, squares = 0.0, left = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        service_term += 0.5 * sys.mix(i).rate_second_moment();
        squares += sys.load(i) * sys.load(i);
        left += left_behind_work(sys, i);
    }
    return rho / (1.0 - rho) * service_term + rho * agg.switch_second / (2.0 * agg.switch_mean) +
           (rho * rho - squares) * agg.switch_mean / (2.0 * (1.0 - rho)) + left;
}

/// sum rho_ik E(W_ik) - RHS, given per-class means. Preempted customers hold
/// unfinished work while they wait for higher classes, which adds
/// lambda_ik E(B_ik^2) rho_H / (2 (1 - rho_H)) to the left-hand side.
inline double pseudo_conservation_residual(const PollingSystem& sys,
                                           const std::vector<std::vector<double>>& means)
{
    double lhs = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const bool preemptive = sys.queue(i).preemption == Preemption::PreemptiveResume;
        for (std::size_t k = 0; k < sys.classes(i); ++k) {
            const auto& c = sys.priority_class(i, k);
            lhs += c.rate * c.service.mean() * means.at(i).at(k);
            if (preemptive) {
                const double rho_h = sys.higher(i, k).load();
                lhs += c.rate * c.service.second_moment() * rho_h / (2.0 * (1.0 - rho_h));
            }
        }
    }
    return lhs - conserved_work(sys);
}

inline std::vector<std::vector<double>> all_mean_waits(const PollingSystem& sys, const MeanWaiting& mw)
{
    std::vector<std::vector<double>> means(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t k = 0; k < sys.classes(i); ++k)
            means[i].push_back(mw(i, k));
    return means;
}

inline double pseudo_conservation_residual(const PollingSystem& sys, const TruncationPolicy& policy = {})
{
    const MeanWaiting mw(sys, policy);
    return pseudo_conservation_residual(sys, all_mean_waits(sys, mw));
}

} // namespace pollcalc
