#pragma once

// Threshold priorities: split a queue's service-time distribution into bands,
// shortest band first, and choose the band edges that minimize the queue's
// overall mean waiting time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "parallel.hpp"
#include "waiting.hpp"

namespace pollcalc {

namespace detail {

inline const QueueSpec& single_class_queue(const SystemSpec& spec, std::size_t i)
{
    if (i >= spec.queues.size())
        throw Error(ErrorCode::BadShape, "queue index out of range");
    const QueueSpec& q = spec.queues[i];
    if (q.classes.size() != 1)
        throw Error(ErrorCode::Unsupported, "thresholds split a queue that has a single class");
    return q;
}

inline double exponential_rate(const SystemSpec& spec, std::size_t i)
{
    const auto* e = std::get_if<Exponential>(&single_class_queue(spec, i).classes[0].service.family());
    if (!e)
        throw Error(ErrorCode::UnsupportedFamily, "threshold optimization needs exponential service");
    return e->rate;
}

} // namespace detail

/// Queue i split at the given service-time thresholds into classes
/// [0, t_1), [t_1, t_2), ..., [t_{K-1}, inf), highest priority first.
inline SystemSpec apply_thresholds(const SystemSpec& spec, std::size_t i, const std::vector<double>& thresholds)
{
    const QueueSpec& q = detail::single_class_queue(spec, i);
    if (thresholds.empty())
        return spec;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (!(thresholds[k] > 0.0) || !std::isfinite(thresholds[k]))
            throw Error(ErrorCode::BadShape, "thresholds must be positive and finite");
        if (k > 0 && !(thresholds[k] > thresholds[k - 1]))
            throw Error(ErrorCode::BadShape, "thresholds must be strictly increasing");
    }
    const PriorityClassSpec& base = q.classes[0];
    std::vector<double> edges{0.0};
    edges.insert(edges.end(), thresholds.begin(), thresholds.end());
    edges.push_back(std::numeric_limits<double>::infinity());

    std::vector<PriorityClassSpec> classes;
    if (const auto* e = std::get_if<Exponential>(&base.service.family())) {
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            const TruncatedBand band = truncate_exponential(e->rate, edges[k], edges[k + 1]);
            classes.push_back({base.rate * band.probability, band.distribution});
        }
    } else if (const auto* d = std::get_if<Deterministic>(&base.service.family())) {
        // every job falls in the band holding the constant
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            const bool holds = d->value >= edges[k] && d->value < edges[k + 1];
            classes.push_back({holds ? base.rate : 0.0, base.service});
        }
    } else {
        throw Error(ErrorCode::UnsupportedFamily,
                    "thresholds need exponential or deterministic service, not " + std::string(base.service.family_name()));
    }
    SystemSpec out = spec;
    out.queues[i].classes = std::move(classes);
    return out;
}

/// Equal-probability band edges of Exp(rate): quantiles k / K, k = 1..K-1.
inline std::vector<double> quantile_thresholds(double rate, int bands)
{
    std::vector<double> t;
    for (int k = 1; k < bands; ++k)
        t.push_back(-std::log1p(-static_cast<double>(k) / bands) / rate);
    return t;
}

/// sum_k (lambda_ik / lambda_i) E(W_ik)
inline double overall_mean_wait(const PollingSystem& sys, std::size_t i)
{
    return MeanWaiting(sys).queue_mean(i);
}

/// Evaluates thresholds for one queue, reusing the cycle moments: band
/// splitting leaves every queue-level aggregate unchanged.
class ThresholdObjective {
public:
    ThresholdObjective(SystemSpec spec, std::size_t i, const TruncationPolicy& policy = {})
        : spec_(std::move(spec)), queue_(i), moments_(cycle_moments(PollingSystem(spec_), policy))
    {
        detail::single_class_queue(spec_, i);
    }

    double operator()(const std::vector<double>& thresholds) const
    {
        const PollingSystem sys(apply_thresholds(spec_, queue_, thresholds));
        return MeanWaiting(sys, moments_).queue_mean(queue_);
    }

    const SystemSpec& spec() const noexcept { return spec_; }
    std::size_t queue() const noexcept { return queue_; }

private:
    SystemSpec spec_;
    std::size_t queue_;
    CycleMoments moments_;
};

struct ThresholdResult {
    std::vector<double> thresholds;
    double value = 0.0;
    int evaluations = 0;
};

struct OptimizerPolicy {
    double tolerance = 1e-6;   ///< on the objective, per coordinate-descent sweep
    int starts = 5;
    int max_sweeps = 200;
    double band_floor = 1e-9;  ///< smallest probability mass kept in a band
    unsigned threads = 0;
};

namespace detail {

/// Golden-section minimum of a unimodal f on [a, b].
template <class F>
double golden_section(F&& f, double a, double b, double tol, int& evaluations)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    evaluations += 2;
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
        ++evaluations;
    }
    return f1 <= f2 ? x1 : x2;
}

} // namespace detail

/// Coordinate descent over the band edges in quantile space, each coordinate
/// by golden-section search, from several quantile-spaced starting points.
inline ThresholdResult optimize_thresholds(const SystemSpec& spec, std::size_t i, int classes,
                                           const OptimizerPolicy& policy = {})
{
    if (classes < 2)
        throw Error(ErrorCode::Domain, "optimization needs K >= 2 classes");
    const double rate = detail::exponential_rate(spec, i);
    const ThresholdObjective objective(spec, i);
    const int m = classes - 1;
    const double floor = policy.band_floor;

    auto to_thresholds = [&](const std::vector<double>& u) {
        std::vector<double> t(u.size());
        for (std::size_t k = 0; k < u.size(); ++k)
            t[k] = -std::log1p(-u[k]) / rate;
        return t;
    };

    const int starts = std::max(1, policy.starts);
    std::vector<ThresholdResult> results(static_cast<std::size_t>(starts));
    detail::parallel_for(results.size(), policy.threads ? policy.threads : default_threads(), [&](std::size_t s) {
        // start s spaces the quantiles as 1 - (1 - k/K)^power
        const double power = 0.5 + static_cast<double>(s);
        std::vector<double> u(static_cast<std::size_t>(m));
        for (int k = 1; k <= m; ++k)
            u[static_cast<std::size_t>(k - 1)] = 1.0 - std::pow(1.0 - static_cast<double>(k) / classes, power);
        ThresholdResult r;
        double best = objective(to_thresholds(u));
        ++r.evaluations;
        for (int sweep = 0; sweep < policy.max_sweeps; ++sweep) {
            const double before = best;
            for (std::size_t k = 0; k < u.size(); ++k) {
                const double lo = (k == 0 ? 0.0 : u[k - 1]) + floor;
                const double hi = (k + 1 == u.size() ? 1.0 : u[k + 1]) - floor;
                if (!(hi > lo))
                    continue;
                auto along = [&](double x) {
                    std::vector<double> trial = u;
                    trial[k] = x;
                    return objective(to_thresholds(trial));
                };
                const double x = detail::golden_section(along, lo, hi, 1e-7, r.evaluations);
                const double fx = along(x);
                ++r.evaluations;
                if (fx < best) {
                    best = fx;
                    u[k] = x;
                }
            }
            if (before - best <= policy.tolerance)
                break;
        }
        r.thresholds = to_thresholds(u);
        r.value = best;
        results[s] = std::move(r);
    });

    ThresholdResult best = results.front();
    int evaluations = 0;
    for (const auto& r : results) {
        evaluations += r.evaluations;
        if (r.value < best.value)
            best = r;
    }
    best.evaluations = evaluations;
    return best;
}

/// Shortest-job-first limit: overall mean wait with `levels` equal-probability bands.
inline double sjf_limit(const SystemSpec& spec, std::size_t i, int levels)
{
    if (levels < 50)
        throw Error(ErrorCode::Domain, "SJF approximation needs at least 50 levels");
    const double rate = detail::exponential_rate(spec, i);
    return ThresholdObjective(spec, i)(quantile_thresholds(rate, levels));
}

struct SweepRow {
    int classes;
    std::vector<double> thresholds;
    double value;
};

/// Optimized thresholds for K = 1..max_classes (K = 1 is FCFS).
inline std::vector<SweepRow> threshold_sweep(const SystemSpec& spec, std::size_t i, int max_classes,
                                             const OptimizerPolicy& policy = {})
{
    std::vector<SweepRow> rows;
    rows.push_back({1, {}, ThresholdObjective(spec, i)({})});
    for (int k = 2; k <= max_classes; ++k) {
        const ThresholdResult r = optimize_thresholds(spec, i, k, policy);
        rows.push_back({k, r.thresholds, r.value});
    }
    return rows;
}

/// N identical single-class queues sharing total rate `total_rate`, with
/// deterministic switch-overs summing to `total_switch`.
inline SystemSpec symmetric_system(std::size_t n, Discipline discipline, double total_rate,
                                   const Distribution& service, double total_switch)
{
    if (n == 0)
        throw Error(ErrorCode::BadShape, "symmetric system needs N >= 1");
    SystemSpec spec;
    for (std::size_t i = 0; i < n; ++i) {
        QueueSpec q;
        q.discipline = discipline;
        q.classes.push_back({total_rate / static_cast<double>(n), service});
        q.switch_over = Distribution::deterministic(total_switch / static_cast<double>(n));
        spec.queues.push_back(std::move(q));
    }
    return spec;
}

struct SymmetricRow {
    std::size_t queues;
    Discipline discipline;
    double mean_wait;
};

inline std::vector<SymmetricRow> symmetric_sweep(const std::vector<std::size_t>& sizes,
                                                 const std::vector<Discipline>& disciplines, double total_rate,
                                                 const Distribution& service, double total_switch)
{
    std::vector<SymmetricRow> rows;
    for (Discipline d : disciplines)
        for (std::size_t n : sizes) {
            const PollingSystem sys(symmetric_system(n, d, total_rate, service, total_switch));
            rows.push_back({n, d, MeanWaiting(sys).queue_mean(0)});
        }
    return rows;
}

} // namespace pollcalc
