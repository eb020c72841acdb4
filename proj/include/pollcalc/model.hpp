#pragma once

// Polling-system description, validation and derived aggregates.
//
// Queues and classes are indexed from 0 in the API. Class order inside a queue
// is priority order: index 0 is served first.

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "error.hpp"
#include "taylor.hpp"

namespace pollcalc {

enum class Discipline { Gated, Exhaustive, GloballyGated };
enum class Preemption { Nonpreemptive, PreemptiveResume };

/// Analytic use needs a positive total switch-over time and rho < 1; the
/// simulator needs neither.
enum class Mode { Analytic, Simulation };

constexpr std::string_view to_string(Discipline d) noexcept
{
    switch (d) {
    case Discipline::Gated: return "gated";
    case Discipline::Exhaustive: return "exhaustive";
    case Discipline::GloballyGated: return "globally_gated";
    }
    return "?";
}

constexpr std::string_view to_string(Preemption p) noexcept
{
    return p == Preemption::Nonpreemptive ? "nonpreemptive" : "preemptive_resume";
}

struct PriorityClassSpec {
    double rate = 0.0;
    Distribution service;
};

struct QueueSpec {
    Discipline discipline = Discipline::Gated;
    Preemption preemption = Preemption::Nonpreemptive;
    std::vector<PriorityClassSpec> classes;
    Distribution switch_over;
};

struct SystemSpec {
    std::vector<QueueSpec> queues;
};

/// A rate-weighted group of classes, treated as one Poisson stream whose
/// service time is the rate-weighted mixture of the members.
class ClassMix {
public:
    ClassMix() = default;
    explicit ClassMix(std::span<const PriorityClassSpec> classes) : classes_(classes)
    {
        for (const auto& c : classes_) {
            rate_ += c.rate;
            load_ += c.rate * c.service.mean();
            rate_second_moment_ += c.rate * c.service.second_moment();
        }
    }

    double rate() const noexcept { return rate_; }
    double load() const noexcept { return load_; }
    bool empty() const noexcept { return rate_ == 0.0; }
    double mean_service() const { return rate_ > 0.0 ? load_ / rate_ : 0.0; }
    /// sum_k lambda_k E(B_k^2)
    double rate_second_moment() const noexcept { return rate_second_moment_; }

    /// sum_k lambda_k (1 - beta_k(w)); exactly zero at w = 0.
    template <Scalar S>
    S exponent(const S& w) const
    {
        S acc(0.0);
        for (const auto& c : classes_)
            if (c.rate > 0.0)
                acc += (S(1.0) - c.service.lst(w)) * c.rate;
        return acc;
    }

    /// Mixture LST; members weighted equally when the group carries no traffic.
    template <Scalar S>
    S lst(const S& w) const
    {
        if (rate_ > 0.0)
            return S(1.0) - exponent(w) * (1.0 / rate_);
        S acc(0.0);
        for (const auto& c : classes_)
            acc += c.service.lst(w);
        return classes_.empty() ? S(1.0) : acc * (1.0 / static_cast<double>(classes_.size()));
    }

    template <Scalar S>
    S busy_period(const S& w, const FixedPointPolicy& policy = {}) const
    {
        return busy_period_fixed_point([this](const S& x) { return lst(x); }, rate_, w, policy);
    }

private:
    std::span<const PriorityClassSpec> classes_;
    double rate_ = 0.0;
    double load_ = 0.0;
    double rate_second_moment_ = 0.0;
};

struct QueueAggregates {
    double rate = 0.0;                ///< lambda_i
    double load = 0.0;                ///< rho_i
    std::vector<double> class_loads;  ///< rho_ik
    Distribution service;             ///< beta_i as a mixture
    double switch_mean = 0.0;         ///< E(S_i)
    double switch_second = 0.0;       ///< E(S_i^2)
    double intervisit_mean = 0.0;     ///< E(I_i) = (1 - rho_i) E(C)
};

struct Aggregates {
    std::vector<QueueAggregates> queues;
    double load = 0.0;           ///< rho
    double switch_mean = 0.0;    ///< E(S), S = sum_i S_i
    double switch_second = 0.0;  ///< E(S^2) with independent S_i
    double cycle_mean = 0.0;     ///< E(C) = E(S) / (1 - rho)
    bool globally_gated = false;
};

inline constexpr double stability_margin = 1e-9;

inline Aggregates validate(const SystemSpec& spec, Mode mode = Mode::Analytic)
{
    if (spec.queues.empty())
        throw Error(ErrorCode::BadShape, "system needs at least one queue");

    Aggregates agg;
    std::size_t gg_count = 0;
    for (std::size_t i = 0; i < spec.queues.size(); ++i) {
        const auto& q = spec.queues[i];
        const std::string where = "queue " + std::to_string(i + 1);
        if (q.classes.empty())
            throw Error(ErrorCode::BadShape, where + " has no priority classes");
        if (q.preemption == Preemption::PreemptiveResume && q.discipline != Discipline::Exhaustive)
            throw Error(ErrorCode::BadShape, where + ": preemptive resume requires exhaustive service");
        if (q.discipline == Discipline::GloballyGated)
            ++gg_count;

        QueueAggregates qa;
        std::vector<double> weights;
        std::vector<Distribution> components;
        for (const auto& c : q.classes) {
            if (!(c.rate >= 0.0) || !std::isfinite(c.rate))
                throw Error(ErrorCode::BadShape, where + " has a negative or non-finite arrival rate");
            qa.rate += c.rate;
            qa.class_loads.push_back(c.rate * c.service.mean());
            qa.load += qa.class_loads.back();
            weights.push_back(c.rate);
            components.push_back(c.service);
        }
        if (qa.rate == 0.0)
            std::fill(weights.begin(), weights.end(), 1.0);
        qa.service = components.size() == 1 ? components.front()
                                            : Distribution::mixture(std::move(weights), std::move(components));
        qa.switch_mean = q.switch_over.mean();
        qa.switch_second = q.switch_over.second_moment();
        agg.load += qa.load;
        agg.switch_mean += qa.switch_mean;
        agg.queues.push_back(std::move(qa));
    }
    if (gg_count != 0 && gg_count != spec.queues.size())
        throw Error(ErrorCode::BadShape, "globally gated service must be used by all queues or none");
    agg.globally_gated = gg_count != 0;

    // E(S^2) of the independent sum
    double var = 0.0;
    for (const auto& qa : agg.queues)
        var += qa.switch_second - qa.switch_mean * qa.switch_mean;
    agg.switch_second = var + agg.switch_mean * agg.switch_mean;

    if (mode == Mode::Analytic) {
        if (agg.load >= 1.0 - stability_margin)
            throw Error(ErrorCode::Unstable, "total load rho = " + std::to_string(agg.load) + " is not below 1");
        if (!(agg.switch_mean > 0.0))
            throw Error(ErrorCode::ZeroSwitchover, "analysis requires a positive total mean switch-over time");
        agg.cycle_mean = agg.switch_mean / (1.0 - agg.load);
        for (auto& qa : agg.queues)
            qa.intervisit_mean = (1.0 - qa.load) * agg.cycle_mean;
    } else if (agg.load < 1.0 && agg.switch_mean > 0.0) {
        agg.cycle_mean = agg.switch_mean / (1.0 - agg.load);
        for (auto& qa : agg.queues)
            qa.intervisit_mean = (1.0 - qa.load) * agg.cycle_mean;
    }
    return agg;
}

/// Validated, immutable polling system. Safe to share between threads.
class PollingSystem {
public:
    explicit PollingSystem(SystemSpec spec, Mode mode = Mode::Analytic)
        : spec_(std::move(spec)), aggregates_(validate(spec_, mode)), mode_(mode)
    {
    }

    const SystemSpec& spec() const noexcept { return spec_; }
    const Aggregates& aggregates() const noexcept { return aggregates_; }
    Mode mode() const noexcept { return mode_; }

    std::size_t size() const noexcept { return spec_.queues.size(); }
    const QueueSpec& queue(std::size_t i) const { return spec_.queues.at(i); }
    std::size_t classes(std::size_t i) const { return queue(i).classes.size(); }
    const PriorityClassSpec& priority_class(std::size_t i, std::size_t k) const { return queue(i).classes.at(k); }

    double rate(std::size_t i) const { return aggregates_.queues[i].rate; }
    double load(std::size_t i) const { return aggregates_.queues[i].load; }
    double load() const { return aggregates_.load; }
    double cycle_mean() const { return aggregates_.cycle_mean; }
    bool globally_gated() const { return aggregates_.globally_gated; }
    Discipline discipline(std::size_t i) const { return queue(i).discipline; }

    /// All classes of queue i.
    ClassMix mix(std::size_t i) const { return ClassMix(queue(i).classes); }
    /// Classes 0..k-1 of queue i (strictly higher priority than k).
    ClassMix higher(std::size_t i, std::size_t k) const
    {
        return ClassMix(std::span(queue(i).classes).first(k));
    }
    /// Class k of queue i alone.
    ClassMix only(std::size_t i, std::size_t k) const { return ClassMix(std::span(queue(i).classes).subspan(k, 1)); }
    /// Classes k+1..K-1 of queue i (strictly lower priority than k).
    ClassMix lower(std::size_t i, std::size_t k) const { return ClassMix(std::span(queue(i).classes).subspan(k + 1)); }

private:
    SystemSpec spec_;
    Aggregates aggregates_;
    Mode mode_;
};

} // namespace pollcalc
