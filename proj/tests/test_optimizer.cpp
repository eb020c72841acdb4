#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pollcalc;
using namespace testing_support;

namespace {

const Discipline all_disciplines[] = {Discipline::Gated, Discipline::Exhaustive, Discipline::GloballyGated};

ErrorCode code_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Domain;
}

} // namespace

TEST(ApplyThresholds, ExponentialBands)
{
    const SystemSpec split = apply_thresholds(two_queue(Discipline::Gated), 0, {1.0});
    ASSERT_EQ(split.queues[0].classes.size(), 2u);
    EXPECT_NEAR(split.queues[0].classes[0].rate, 0.6 * (1.0 - std::exp(-1.0)), 1e-15);
    EXPECT_NEAR(split.queues[0].classes[1].rate, 0.6 * std::exp(-1.0), 1e-15);
    // memoryless tail: the upper band is 1 + Exp(1)
    EXPECT_NEAR(split.queues[0].classes[1].service.mean(), 2.0, 1e-12);
    EXPECT_EQ(split.queues[1].classes.size(), 1u);
    EXPECT_EQ(apply_thresholds(two_queue(Discipline::Gated), 0, {}).queues[0].classes.size(), 1u);
}

TEST(ApplyThresholds, DeterministicServiceLandsInOneBand)
{
    SystemSpec spec = two_queue(Discipline::Exhaustive);
    spec.queues[0].classes[0].service = Distribution::deterministic(0.7);
    const SystemSpec split = apply_thresholds(spec, 0, {0.5, 1.0});
    ASSERT_EQ(split.queues[0].classes.size(), 3u);
    EXPECT_EQ(split.queues[0].classes[0].rate, 0.0);
    EXPECT_EQ(split.queues[0].classes[1].rate, 0.6);
    EXPECT_EQ(split.queues[0].classes[2].rate, 0.0);
}

TEST(ApplyThresholds, Errors)
{
    const SystemSpec spec = two_queue(Discipline::Gated);
    EXPECT_EQ(code_of([&] { apply_thresholds(spec, 0, {2.0, 1.0}); }), ErrorCode::BadShape);
    EXPECT_EQ(code_of([&] { apply_thresholds(spec, 0, {1.0, 1.0}); }), ErrorCode::BadShape);
    EXPECT_EQ(code_of([&] { apply_thresholds(spec, 0, {-1.0}); }), ErrorCode::BadShape);
    EXPECT_EQ(code_of([&] { apply_thresholds(spec, 0, {50.0}); }), ErrorCode::EmptyBand);
    SystemSpec erlang = spec;
    erlang.queues[0].classes[0].service = Distribution::erlang(2, 2.0);
    EXPECT_EQ(code_of([&] { apply_thresholds(erlang, 0, {1.0}); }), ErrorCode::UnsupportedFamily);
    const SystemSpec two_classes = two_queue_split(Discipline::Gated, {1.0});
    EXPECT_EQ(code_of([&] { apply_thresholds(two_classes, 0, {0.5}); }), ErrorCode::Unsupported);
    EXPECT_EQ(code_of([&] { optimize_thresholds(spec, 0, 1); }), ErrorCode::Domain);
    EXPECT_EQ(code_of([&] { sjf_limit(spec, 0, 10); }), ErrorCode::Domain);
}

TEST(ApplyThresholds, QueueLevelAggregatesUnchanged)
{
    for (auto d : all_disciplines) {
        const PollingSystem base(two_queue(d));
        const PollingSystem split(two_queue_split(d, {0.3, 1.1, 2.5}));
        EXPECT_NEAR(split.load(), base.load(), 1e-15);
        const CycleMoments a = cycle_moments(base), b = cycle_moments(split);
        for (std::size_t j = 0; j < a.begin.size(); ++j) {
            EXPECT_NEAR(b.begin[j].first, a.begin[j].first, 1e-10);
            EXPECT_NEAR(b.begin[j].second / a.begin[j].second, 1.0, 1e-12);
        }
        EXPECT_NEAR(std::abs(cycle_lst_begin(split, 0, complex(0.05, 0.3)) - cycle_lst_begin(base, 0, complex(0.05, 0.3))), 0.0,
                    1e-13);
    }
}

TEST(Objective, NoThresholdsIsFcfs)
{
    for (auto d : all_disciplines) {
        const ThresholdObjective f(two_queue(d), 0);
        EXPECT_NEAR(f({}), mean_waiting(PollingSystem(two_queue(d)), 0, 0), 1e-12);
        // the cached moments give the same answer as a fresh analysis
        const PollingSystem sys(two_queue_split(d, {0.8}));
        EXPECT_NEAR(f({0.8}), MeanWaiting(sys).queue_mean(0), 1e-12);
    }
}

TEST(GoldenSection, FindsMinimumOfUnimodal)
{
    int evaluations = 0;
    const double x = detail::golden_section([](double u) { return (u - 0.3) * (u - 0.3); }, 0.0, 1.0, 1e-9, evaluations);
    EXPECT_NEAR(x, 0.3, 1e-8);
    EXPECT_GT(evaluations, 10);
}

TEST(Optimize, TwoClassesBeatFcfsButNotSjf)
{
    for (auto d : all_disciplines) {
        const SystemSpec spec = two_queue(d);
        const double fcfs = ThresholdObjective(spec, 0)({});
        const ThresholdResult r = optimize_thresholds(spec, 0, 2);
        ASSERT_EQ(r.thresholds.size(), 1u);
        EXPECT_GT(r.thresholds[0], 0.0);
        EXPECT_LT(r.value, fcfs);
        EXPECT_GT(r.value, sjf_limit(spec, 0, 200));
        // a local minimum along the threshold
        const ThresholdObjective f(spec, 0);
        EXPECT_LE(r.value, f({r.thresholds[0] * 1.01}) + 1e-9);
        EXPECT_LE(r.value, f({r.thresholds[0] * 0.99}) + 1e-9);
    }
}

TEST(Optimize, SweepIsNonincreasing)
{
    for (auto d : all_disciplines) {
        const auto rows = threshold_sweep(two_queue(d), 0, 4);
        ASSERT_EQ(rows.size(), 4u);
        for (std::size_t k = 1; k < rows.size(); ++k) {
            EXPECT_LE(rows[k].value, rows[k - 1].value + 1e-9) << to_string(d) << " K = " << rows[k].classes;
            EXPECT_EQ(rows[k].thresholds.size(), static_cast<std::size_t>(rows[k].classes - 1));
            for (std::size_t t = 1; t < rows[k].thresholds.size(); ++t)
                EXPECT_LT(rows[k].thresholds[t - 1], rows[k].thresholds[t]);
        }
    }
}

TEST(Optimize, SjfLimits)
{
    EXPECT_NEAR(sjf_limit(two_queue(Discipline::Gated), 0, 200), 10.38, 0.05);
    EXPECT_NEAR(sjf_limit(two_queue(Discipline::Exhaustive), 0, 200), 3.53, 0.05);
    EXPECT_NEAR(sjf_limit(two_queue(Discipline::GloballyGated), 0, 200), 9.75, 0.05);
}

TEST(Optimize, OptimizedSystemsConserveWork)
{
    for (auto d : all_disciplines) {
        const ThresholdResult r = optimize_thresholds(two_queue(d), 0, 3);
        const PollingSystem sys(apply_thresholds(two_queue(d), 0, r.thresholds));
        EXPECT_LT(std::abs(pseudo_conservation_residual(sys)), 1e-8);
    }
}

TEST(Optimize, OptimizedMeansMatchSimulation)
{
    const SystemSpec spec = two_queue(Discipline::Exhaustive);
    const ThresholdResult r = optimize_thresholds(spec, 0, 2);
    const PollingSystem sys(apply_thresholds(spec, 0, r.thresholds));
    SimulationOptions opt;
    opt.replications = 10;
    opt.cycles = 20000;
    opt.seed = 4;
    const auto& w = simulate(sys, opt).at("W[1]");
    EXPECT_TRUE(w.covers(r.value)) << w.estimate << " +- " << w.half_width << " vs " << r.value;
}

TEST(Symmetric, SweepRows)
{
    const auto rows = symmetric_sweep({2, 4}, {Discipline::Gated, Discipline::Exhaustive}, 0.8, Distribution::exponential(1.0), 2.0);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_NEAR(rows[0].mean_wait, 11.0, 1e-9);
    EXPECT_NEAR(rows[1].mean_wait, 10.0, 1e-9);
    EXPECT_NEAR(rows[2].mean_wait, 7.0, 1e-9);
    EXPECT_NEAR(rows[3].mean_wait, 8.0, 1e-9);
    EXPECT_EQ(code_of([] { symmetric_system(0, Discipline::Gated, 0.8, Distribution::exponential(1.0), 2.0); }),
              ErrorCode::BadShape);
}
