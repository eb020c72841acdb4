#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include <pollcalc/config.hpp>
#include <pollcalc/pollcalc.hpp>

using namespace pollcalc;

#ifndef POLLCALC_CONFIG_DIR
#error "POLLCALC_CONFIG_DIR must point at the configs directory"
#endif

namespace {

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

const char* minimal = R"({"queues": [{"discipline": "gated",
  "switch_over": {"family": "deterministic", "params": {"value": 1}},
  "classes": [{"rate": 0.5, "service": {"family": "exponential", "params": {"rate": 1}}}]}]})";

} // namespace

TEST(Config, ShippedConfigsParseAndValidate)
{
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(POLLCALC_CONFIG_DIR)) {
        if (entry.path().extension() != ".json")
            continue;
        ++count;
        const LoadedConfig c = load_config(entry.path().string());
        EXPECT_FALSE(c.text.empty());
        EXPECT_NO_THROW(PollingSystem{c.spec}) << entry.path();
    }
    EXPECT_GE(count, 5);
}

TEST(Config, ExampleConfigIsTheTwoQueueSystem)
{
    const LoadedConfig c = load_config(std::string(POLLCALC_CONFIG_DIR) + "/two_queue_exhaustive.json");
    const PollingSystem sys(c.spec);
    EXPECT_NEAR(sys.cycle_mean(), 10.0, 1e-12);
    EXPECT_NEAR(mean_waiting(sys, 0, 0), 5.5, 1e-9);
}

TEST(Config, RoundTrip)
{
    const LoadedConfig c = load_config(std::string(POLLCALC_CONFIG_DIR) + "/three_class_preemptive.json");
    const SystemSpec again = spec_from_json(spec_to_json(c.spec));
    EXPECT_EQ(spec_to_json(again), spec_to_json(c.spec));
    EXPECT_EQ(again.queues[0].preemption, Preemption::PreemptiveResume);
    const auto mix = Distribution::mixture({0.25, 0.75}, {Distribution::erlang(2, 1.0), Distribution::hyperexponential({0.5, 0.5}, {1.0, 2.0})});
    const Distribution back = distribution_from_json(distribution_to_json(mix));
    EXPECT_DOUBLE_EQ(back.mean(), mix.mean());
    EXPECT_DOUBLE_EQ(back.second_moment(), mix.second_moment());
}

TEST(Config, PreemptionDefaultsToNonpreemptive)
{
    const SystemSpec s = parse_spec(minimal);
    EXPECT_EQ(s.queues[0].preemption, Preemption::Nonpreemptive);
    EXPECT_EQ(s.queues[0].switch_over.mean(), 1.0);
}

TEST(Config, Errors)
{
    EXPECT_EQ(code_of([] { parse_spec("{not json"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_spec(R"({"queues": []})"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_spec(R"({"queues": [], "extra": 1})"); }), ErrorCode::Config);
    std::string unknown_family = minimal;
    unknown_family.replace(unknown_family.find("deterministic"), 13, "weibull");
    EXPECT_EQ(code_of([&] { parse_spec(unknown_family); }), ErrorCode::Config);
    std::string bad_discipline = minimal;
    bad_discipline.replace(bad_discipline.find("\"gated\""), 7, "\"polite\"");
    EXPECT_EQ(code_of([&] { parse_spec(bad_discipline); }), ErrorCode::Config);
    std::string negative_rate = minimal;
    negative_rate.replace(negative_rate.find("\"rate\": 1}"), 9, "\"rate\": -1");
    EXPECT_EQ(code_of([&] { parse_spec(negative_rate); }), ErrorCode::Config);
    std::string typo = minimal;
    typo.replace(typo.find("\"value\""), 7, "\"valeu\"");
    EXPECT_EQ(code_of([&] { parse_spec(typo); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::Config);
}

TEST(Report, CsvQuoting)
{
    EXPECT_EQ(CsvTable::quote("plain"), "plain");
    EXPECT_EQ(CsvTable::quote("a,b"), "\"a,b\"");
    EXPECT_EQ(CsvTable::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    CsvTable t({"name", "value"});
    t.row() << "W[1,1]" << 12.5;
    t.row() << "ok" << true;
    EXPECT_EQ(t.str(), "name,value\r\n\"W[1,1]\",12.5\r\nok,pass\r\n");
}

TEST(Report, NumberFormat)
{
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(1e-20), "1e-20");
}

TEST(Report, Fnv1aKnownVectors)
{
    EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
    EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
    EXPECT_EQ(hex64(fnv1a64("foobar")), "85944171f73967e8");
}
