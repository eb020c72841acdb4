#pragma once

// Systems shared by the test programs.

#include <cstddef>
#include <random>
#include <vector>

#include <pollcalc/pollcalc.hpp>

namespace testing_support {

using namespace pollcalc;

/// Two queues, Exp(1) service, Exp(1) switch-overs, rates 0.6 and 0.2: rho = 0.8, E(C) = 10.
inline SystemSpec two_queue(Discipline d, double l1 = 0.6, double l2 = 0.2)
{
    SystemSpec s;
    for (double rate : {l1, l2}) {
        QueueSpec q;
        q.discipline = d;
        q.classes.push_back({rate, Distribution::exponential(1.0)});
        q.switch_over = Distribution::exponential(1.0);
        s.queues.push_back(q);
    }
    return s;
}

/// The two-queue system with queue 1 split at the given service-time thresholds.
inline SystemSpec two_queue_split(Discipline d, const std::vector<double>& thresholds,
                                  Preemption p = Preemption::Nonpreemptive)
{
    SystemSpec s = apply_thresholds(two_queue(d), 0, thresholds);
    s.queues[0].preemption = p;
    return s;
}

inline SystemSpec single_queue(Discipline d, double rate, const Distribution& service, const Distribution& switch_over)
{
    SystemSpec s;
    QueueSpec q;
    q.discipline = d;
    q.classes.push_back({rate, service});
    q.switch_over = switch_over;
    s.queues.push_back(q);
    return s;
}

inline double uniform(std::mt19937_64& g, double a, double b)
{
    return std::uniform_real_distribution<double>(a, b)(g);
}

/// A distribution from a random family with the given mean.
inline Distribution random_distribution(std::mt19937_64& g, double mean)
{
    switch (std::uniform_int_distribution<int>(0, 5)(g)) {
    case 0: return Distribution::exponential(1.0 / mean);
    case 1: return Distribution::deterministic(mean);
    case 2: {
        const int shape = std::uniform_int_distribution<int>(2, 4)(g);
        return Distribution::erlang(shape, shape / mean);
    }
    case 3: {
        // two phases with means mean/2 and 3 mean/2, equally likely
        return Distribution::hyperexponential({0.5, 0.5}, {2.0 / mean, 2.0 / (3.0 * mean)});
    }
    case 4: {
        const double lo = uniform(g, 0.2, 0.8);
        return Distribution::mixture({0.5, 0.5}, {Distribution::deterministic(lo * mean),
                                                  Distribution::exponential(1.0 / ((2.0 - lo) * mean))});
    }
    default: {
        // Exp(1) restricted to [a, b), rescaled by its own mean through the rate
        const double a = uniform(g, 0.0, 0.5), b = a + uniform(g, 0.5, 2.0);
        const Distribution unit = Distribution::truncated_exponential(1.0, a, b);
        return Distribution::truncated_exponential(unit.mean() / mean, a * mean / unit.mean(), b * mean / unit.mean());
    }
    }
}

/// N <= 4 queues, K_i <= 3 classes, rho <= 0.9. Exhaustive queues are
/// preemptive with probability 1/2 when `preemption` is set.
inline SystemSpec random_spec(std::mt19937_64& g, Discipline d, bool preemption = true)
{
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(g);
    const double rho = uniform(g, 0.05, 0.9);
    std::vector<std::vector<double>> shares(n);
    double total = 0.0;
    for (auto& q : shares) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 3)(g);
        for (std::size_t c = 0; c < k; ++c) {
            q.push_back(uniform(g, 0.1, 1.0));
            total += q.back();
        }
    }
    SystemSpec s;
    for (const auto& q : shares) {
        QueueSpec qs;
        qs.discipline = d;
        if (d == Discipline::Exhaustive && preemption && uniform(g, 0.0, 1.0) < 0.5)
            qs.preemption = Preemption::PreemptiveResume;
        for (double share : q) {
            const double mean = uniform(g, 0.2, 2.0);
            qs.classes.push_back({rho * share / total / mean, random_distribution(g, mean)});
        }
        qs.switch_over = random_distribution(g, uniform(g, 0.1, 2.0));
        s.queues.push_back(qs);
    }
    return s;
}

} // namespace testing_support
