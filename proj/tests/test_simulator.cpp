#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pollcalc;
using namespace testing_support;

namespace {

SimulationOptions quick(std::uint64_t seed = 1)
{
    SimulationOptions opt;
    opt.replications = 10;
    opt.cycles = 20000;
    opt.seed = seed;
    return opt;
}

const JobRecord& find_job(const std::vector<JobRecord>& jobs, double arrival)
{
    for (const auto& j : jobs)
        if (j.arrival == arrival)
            return j;
    throw std::runtime_error("job not found");
}

} // namespace

TEST(Trace, GatedServesOnlyWhatWasPresent)
{
    // B arrives while A is served, so it waits for the next visit
    const PollingSystem sys(single_queue(Discipline::Gated, 0.1, Distribution::exponential(1.0), Distribution::deterministic(1.0)),
                            Mode::Simulation);
    const auto jobs = simulate_trace(sys, {{0.5, 0, 0, 2.0}, {1.5, 0, 0, 1.0}}, 20.0);
    ASSERT_EQ(jobs.size(), 2u);
    const auto& a = find_job(jobs, 0.5);
    const auto& b = find_job(jobs, 1.5);
    EXPECT_DOUBLE_EQ(a.service_start, 1.0);
    EXPECT_DOUBLE_EQ(a.departure, 3.0);
    EXPECT_DOUBLE_EQ(b.service_start, 4.0);
    EXPECT_DOUBLE_EQ(b.service_start - b.arrival, 2.5);
}

TEST(Trace, ExhaustiveServesArrivalsDuringTheVisit)
{
    const PollingSystem sys(single_queue(Discipline::Exhaustive, 0.1, Distribution::exponential(1.0), Distribution::deterministic(1.0)),
                            Mode::Simulation);
    const auto jobs = simulate_trace(sys, {{0.5, 0, 0, 2.0}, {1.5, 0, 0, 1.0}}, 20.0);
    ASSERT_EQ(jobs.size(), 2u);
    EXPECT_DOUBLE_EQ(find_job(jobs, 0.5).service_start, 1.0);
    EXPECT_DOUBLE_EQ(find_job(jobs, 1.5).service_start - 1.5, 1.5);
    EXPECT_DOUBLE_EQ(find_job(jobs, 1.5).departure, 4.0);
}

TEST(Trace, GloballyGatedWaitsForTheNextCycle)
{
    // two queues, unit switch-overs; X reaches Q2 at 0.5, after the gate closed at 0
    SystemSpec spec;
    for (int q = 0; q < 2; ++q) {
        QueueSpec qs;
        qs.discipline = Discipline::GloballyGated;
        qs.classes.push_back({0.1, Distribution::exponential(1.0)});
        qs.switch_over = Distribution::deterministic(1.0);
        spec.queues.push_back(qs);
    }
    const PollingSystem sys(spec, Mode::Simulation);
    const auto jobs = simulate_trace(sys, {{0.5, 1, 0, 1.0}}, 20.0);
    ASSERT_EQ(jobs.size(), 1u);
    // gate at 0 (empty), Q2 at 1, Q1 again at 2 closes the gate on X, Q2 at 3
    EXPECT_DOUBLE_EQ(jobs[0].service_start - jobs[0].arrival, 2.5);
}

TEST(Trace, PreemptiveResumeInterruptsLowerClass)
{
    SystemSpec spec;
    QueueSpec q;
    q.discipline = Discipline::Exhaustive;
    q.preemption = Preemption::PreemptiveResume;
    q.classes = {{0.1, Distribution::exponential(1.0)}, {0.1, Distribution::exponential(1.0)}};
    q.switch_over = Distribution::deterministic(0.5);
    spec.queues.push_back(q);
    const PollingSystem sys(spec, Mode::Simulation);
    // L starts at 0.5, H1 interrupts at 2, H2 arrives while H1 is served
    const auto jobs = simulate_trace(sys, {{0.5, 0, 1, 3.0}, {2.0, 0, 0, 1.0}, {2.5, 0, 0, 0.5}}, 30.0);
    ASSERT_EQ(jobs.size(), 3u);
    EXPECT_DOUBLE_EQ(find_job(jobs, 2.0).departure, 3.0);
    EXPECT_DOUBLE_EQ(find_job(jobs, 2.5).departure, 3.5);
    const auto& low = find_job(jobs, 0.5);
    EXPECT_DOUBLE_EQ(low.service_start, 0.5);
    // 1.5 served before the interruption, 1.5 after H2 leaves at 3.5
    EXPECT_DOUBLE_EQ(low.departure, 5.0);
    EXPECT_EQ(low.preemptions, 1);
    EXPECT_EQ(jobs.back().arrival, 0.5);
}

TEST(Trace, NonpreemptivePriorityServesHighFirst)
{
    SystemSpec spec;
    QueueSpec q;
    q.discipline = Discipline::Gated;
    q.classes = {{0.1, Distribution::exponential(1.0)}, {0.1, Distribution::exponential(1.0)}};
    q.switch_over = Distribution::deterministic(1.0);
    spec.queues.push_back(q);
    const PollingSystem sys(spec, Mode::Simulation);
    // both present when the gate closes at 1; the later high-priority one goes first
    const auto jobs = simulate_trace(sys, {{0.2, 0, 1, 1.0}, {0.4, 0, 0, 1.0}}, 20.0);
    ASSERT_EQ(jobs.size(), 2u);
    EXPECT_DOUBLE_EQ(find_job(jobs, 0.4).service_start, 1.0);
    EXPECT_DOUBLE_EQ(find_job(jobs, 0.2).service_start, 2.0);
}

TEST(Trace, FcfsWithinAClass)
{
    const PollingSystem sys(single_queue(Discipline::Exhaustive, 0.1, Distribution::exponential(1.0), Distribution::deterministic(1.0)),
                            Mode::Simulation);
    std::vector<ScriptedArrival> script;
    for (int k = 0; k < 6; ++k)
        script.push_back({0.1 * (k + 1), 0, 0, 0.3});
    const auto jobs = simulate_trace(sys, script, 20.0);
    ASSERT_EQ(jobs.size(), 6u);
    for (std::size_t k = 1; k < jobs.size(); ++k) {
        EXPECT_LT(jobs[k - 1].arrival, jobs[k].arrival);
        EXPECT_DOUBLE_EQ(jobs[k].service_start, jobs[k - 1].departure);
    }
}

TEST(Simulate, SingleServerQueueWithNegligibleSwitchOver)
{
    // M/M/1 with rho = 0.5: E(W) = rho / (mu - lambda) = 1
    const PollingSystem sys(single_queue(Discipline::Exhaustive, 0.5, Distribution::exponential(1.0), Distribution::deterministic(1e-9)));
    SimulationOptions opt;
    opt.replications = 10;
    opt.horizon = 2e5;
    opt.warmup_time = 1e3;
    const auto& w = simulate(sys, opt).at("W[1,1]");
    EXPECT_TRUE(w.covers(1.0)) << w.estimate << " +- " << w.half_width;
    EXPECT_NEAR(mean_waiting(sys, 0, 0), 1.0, 1e-6);
}

TEST(Simulate, SymmetricExhaustiveTwoQueues)
{
    const PollingSystem sys(symmetric_system(2, Discipline::Exhaustive, 0.8, Distribution::exponential(1.0), 2.0));
    const SimulationResult r = simulate(sys, quick(5));
    EXPECT_TRUE(r.at("W[1,1]").covers(7.0)) << r.at("W[1,1]").estimate;
    EXPECT_TRUE(r.at("W[2,1]").covers(7.0)) << r.at("W[2,1]").estimate;
}

TEST(Simulate, LightLoadWaitIsResidualSwitchOver)
{
    // with almost no traffic a customer waits for the rest of the current cycle
    const PollingSystem sys(two_queue(Discipline::Gated, 1e-3, 1e-3));
    SimulationOptions opt = quick(6);
    opt.cycles = 100000;
    const auto& w = simulate(sys, opt).at("W[1]");
    const double residual = sys.aggregates().switch_second / (2.0 * sys.aggregates().switch_mean);
    EXPECT_NEAR(mean_waiting(sys, 0, 0), residual, 0.01);
    EXPECT_TRUE(w.covers(mean_waiting(sys, 0, 0))) << w.estimate << " vs " << residual;
}

TEST(Simulate, ReproducibleForSeedAndThreads)
{
    const PollingSystem sys(two_queue_split(Discipline::Exhaustive, {0.7}, Preemption::PreemptiveResume));
    SimulationOptions a = quick(77);
    a.cycles = 2000;
    a.threads = 1;
    SimulationOptions b = a;
    b.threads = 4;
    const SimulationResult ra = simulate(sys, a), rb = simulate(sys, b);
    ASSERT_EQ(ra.quantities.size(), rb.quantities.size());
    for (std::size_t q = 0; q < ra.quantities.size(); ++q) {
        EXPECT_EQ(ra.quantities[q].first, rb.quantities[q].first);
        EXPECT_EQ(ra.quantities[q].second.estimate, rb.quantities[q].second.estimate) << ra.quantities[q].first;
        EXPECT_EQ(ra.quantities[q].second.half_width, rb.quantities[q].second.half_width);
    }
    SimulationOptions c = a;
    c.seed = 78;
    EXPECT_NE(simulate(sys, c).at("W[1,1]").estimate, ra.at("W[1,1]").estimate);
}

TEST(Simulate, WorkConservationHolds)
{
    for (auto d : {Discipline::Gated, Discipline::Exhaustive, Discipline::GloballyGated}) {
        const PollingSystem sys(two_queue_split(d, {0.5, 2.0}));
        const auto& e = simulate(sys, quick(8)).at("sum rho W");
        double rhs = conserved_work(sys);
        EXPECT_TRUE(e.covers(rhs)) << to_string(d) << ": " << e.estimate << " +- " << e.half_width << " vs " << rhs;
    }
}

TEST(Simulate, MeansMatchAnalysis)
{
    for (auto d : {Discipline::Gated, Discipline::Exhaustive, Discipline::GloballyGated}) {
        const PollingSystem sys(two_queue_split(d, {0.5, 2.0}));
        const MeanWaiting mw(sys);
        const SimulationResult r = simulate(sys, quick(9));
        for (std::size_t i = 0; i < sys.size(); ++i)
            for (std::size_t k = 0; k < sys.classes(i); ++k) {
                const auto& w = r.at(class_key("W", i, k));
                EXPECT_TRUE(w.covers(mw(i, k))) << to_string(d) << " " << class_key("W", i, k) << ": " << w.estimate
                                                << " +- " << w.half_width << " vs " << mw(i, k);
                const auto& l = r.at(class_key("L", i, k));
                const double little = sys.priority_class(i, k).rate * mw.sojourn(i, k);
                EXPECT_TRUE(l.covers(little)) << class_key("L", i, k) << ": " << l.estimate << " vs " << little;
            }
    }
}

TEST(Simulate, PreemptiveMeansMatchAnalysis)
{
    const PollingSystem sys(two_queue_split(Discipline::Exhaustive, {0.5, 2.0}, Preemption::PreemptiveResume));
    const MeanWaiting mw(sys);
    const SimulationResult r = simulate(sys, quick(10));
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& w = r.at(class_key("W", 0, k));
        EXPECT_TRUE(w.covers(mw(0, k))) << k << ": " << w.estimate << " +- " << w.half_width << " vs " << mw(0, k);
    }
}

TEST(Simulate, NeedsTenReplications)
{
    const PollingSystem sys(two_queue(Discipline::Gated));
    SimulationOptions opt;
    opt.replications = 9;
    try {
        simulate(sys, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Domain);
    }
}

TEST(Samples, CountedCustomersOfOneClass)
{
    const PollingSystem sys(two_queue_split(Discipline::Gated, {0.7}));
    WaitSamplingOptions opt;
    opt.seed = 3;
    opt.keep_probability = 0.5;
    opt.only = std::pair<std::size_t, std::size_t>{0, 1};
    const auto samples = waiting_samples(sys, 20000, opt);
    ASSERT_EQ(samples.size(), 20000u);
    double acc = 0.0;
    for (const auto& s : samples) {
        EXPECT_EQ(s.queue, 0u);
        EXPECT_EQ(s.cls, 1u);
        EXPECT_GE(s.wait, 0.0);
        acc += s.wait;
    }
    // waits of nearby customers are correlated, so only a loose check here
    EXPECT_NEAR(acc / 20000.0 / mean_waiting(sys, 0, 1), 1.0, 0.1);
    EXPECT_TRUE(waiting_samples(sys, 0, opt).empty());
}
