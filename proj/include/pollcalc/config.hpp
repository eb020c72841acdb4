#pragma once

// JSON system configuration.
//
//   {"queues": [{"discipline": "exhaustive", "preemption": "nonpreemptive",
//                "switch_over": {"family": "exponential", "params": {"rate": 1}},
//                "classes": [{"rate": 0.6,
//                             "service": {"family": "exponential", "params": {"rate": 1}}}]}]}
//
// Unknown keys are rejected so that typos do not silently fall back to defaults.

#include <cstdint>
#include <fstream>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "distribution.hpp"
#include "error.hpp"
#include "model.hpp"

namespace pollcalc {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void config_error(const std::string& where, const std::string& what)
{
    throw Error(ErrorCode::Config, where + ": " + what);
}

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> keys)
{
    if (!j.is_object())
        config_error(where, "expected an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (auto k : keys)
            known = known || item.key() == k;
        if (!known)
            config_error(where, "unknown key '" + item.key() + "'");
    }
}

inline const json& require(const json& j, const std::string& where, const char* key)
{
    if (!j.contains(key))
        config_error(where, std::string("missing '") + key + "'");
    return j.at(key);
}

inline double number(const json& j, const std::string& where, const char* key)
{
    const json& v = require(j, where, key);
    if (!v.is_number())
        config_error(where, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& where, const char* key)
{
    const json& v = require(j, where, key);
    if (!v.is_array())
        config_error(where, std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number())
            config_error(where, std::string("'") + key + "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::string text(const json& j, const std::string& where, const char* key)
{
    const json& v = require(j, where, key);
    if (!v.is_string())
        config_error(where, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace detail

inline Distribution distribution_from_json(const json& j, const std::string& where = "distribution")
{
    using namespace detail;
    allow_keys(j, where, {"family", "params"});
    const std::string family = text(j, where, "family");
    const json& p = require(j, where, "params");
    const std::string at = where + " (" + family + ")";
    try {
        if (family == "exponential") {
            allow_keys(p, at, {"rate"});
            return Distribution::exponential(number(p, at, "rate"));
        }
        if (family == "deterministic") {
            allow_keys(p, at, {"value"});
            return Distribution::deterministic(number(p, at, "value"));
        }
        if (family == "erlang") {
            allow_keys(p, at, {"shape", "rate"});
            const json& shape = require(p, at, "shape");
            if (!shape.is_number_integer())
                config_error(at, "'shape' must be an integer");
            return Distribution::erlang(shape.get<int>(), number(p, at, "rate"));
        }
        if (family == "hyperexponential") {
            allow_keys(p, at, {"weights", "rates"});
            return Distribution::hyperexponential(numbers(p, at, "weights"), numbers(p, at, "rates"));
        }
        if (family == "truncated_exponential") {
            allow_keys(p, at, {"rate", "lower", "upper"});
            const json& upper = require(p, at, "upper");
            const double hi = upper.is_null() ? std::numeric_limits<double>::infinity() : number(p, at, "upper");
            return Distribution::truncated_exponential(number(p, at, "rate"), number(p, at, "lower"), hi);
        }
        if (family == "mixture") {
            allow_keys(p, at, {"components"});
            const json& comps = require(p, at, "components");
            if (!comps.is_array())
                config_error(at, "'components' must be an array");
            std::vector<double> weights;
            std::vector<Distribution> parts;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                const std::string cw = at + " component " + std::to_string(c + 1);
                allow_keys(comps[c], cw, {"weight", "distribution"});
                weights.push_back(number(comps[c], cw, "weight"));
                parts.push_back(distribution_from_json(require(comps[c], cw, "distribution"), cw));
            }
            return Distribution::mixture(std::move(weights), std::move(parts));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config)
            throw;
        config_error(at, e.what());
    }
    config_error(where, "unknown family '" + family + "'");
}

inline json distribution_to_json(const Distribution& d)
{
    json p = json::object();
    std::visit(
        [&p](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                p["rate"] = f.rate;
            } else if constexpr (std::is_same_v<T, Deterministic>) {
                p["value"] = f.value;
            } else if constexpr (std::is_same_v<T, Erlang>) {
                p["shape"] = f.shape;
                p["rate"] = f.rate;
            } else if constexpr (std::is_same_v<T, HyperExponential>) {
                p["weights"] = f.weights;
                p["rates"] = f.rates;
            } else if constexpr (std::is_same_v<T, TruncatedExponential>) {
                p["rate"] = f.rate;
                p["lower"] = f.lower;
                p["upper"] = std::isinf(f.upper) ? json(nullptr) : json(f.upper);
            } else {
                json comps = json::array();
                for (std::size_t c = 0; c < f.components.size(); ++c)
                    comps.push_back({{"weight", f.weights[c]}, {"distribution", distribution_to_json(f.components[c])}});
                p["components"] = comps;
            }
        },
        d.family());
    return {{"family", std::string(d.family_name())}, {"params", p}};
}

inline Discipline discipline_from_string(const std::string& s, const std::string& where)
{
    for (Discipline d : {Discipline::Gated, Discipline::Exhaustive, Discipline::GloballyGated})
        if (s == to_string(d))
            return d;
    detail::config_error(where, "unknown discipline '" + s + "' (gated, exhaustive, globally_gated)");
}

inline Preemption preemption_from_string(const std::string& s, const std::string& where)
{
    for (Preemption p : {Preemption::Nonpreemptive, Preemption::PreemptiveResume})
        if (s == to_string(p))
            return p;
    detail::config_error(where, "unknown preemption '" + s + "' (nonpreemptive, preemptive_resume)");
}

inline SystemSpec spec_from_json(const json& j)
{
    using namespace detail;
    allow_keys(j, "config", {"queues"});
    const json& queues = require(j, "config", "queues");
    if (!queues.is_array() || queues.empty())
        config_error("config", "'queues' must be a non-empty array");
    SystemSpec spec;
    for (std::size_t i = 0; i < queues.size(); ++i) {
        const std::string where = "queue " + std::to_string(i + 1);
        const json& q = queues[i];
        allow_keys(q, where, {"discipline", "preemption", "switch_over", "classes"});
        QueueSpec qs;
        qs.discipline = discipline_from_string(text(q, where, "discipline"), where);
        if (q.contains("preemption"))
            qs.preemption = preemption_from_string(text(q, where, "preemption"), where);
        qs.switch_over = distribution_from_json(require(q, where, "switch_over"), where + " switch_over");
        const json& classes = require(q, where, "classes");
        if (!classes.is_array())
            config_error(where, "'classes' must be an array");
        for (std::size_t k = 0; k < classes.size(); ++k) {
            const std::string cw = where + " class " + std::to_string(k + 1);
            allow_keys(classes[k], cw, {"rate", "service"});
            qs.classes.push_back(
                {number(classes[k], cw, "rate"), distribution_from_json(require(classes[k], cw, "service"), cw + " service")});
        }
        spec.queues.push_back(std::move(qs));
    }
    return spec;
}

inline json spec_to_json(const SystemSpec& spec)
{
    json queues = json::array();
    for (const auto& q : spec.queues) {
        json classes = json::array();
        for (const auto& c : q.classes)
            classes.push_back({{"rate", c.rate}, {"service", distribution_to_json(c.service)}});
        queues.push_back({{"discipline", std::string(to_string(q.discipline))},
                          {"preemption", std::string(to_string(q.preemption))},
                          {"switch_over", distribution_to_json(q.switch_over)},
                          {"classes", classes}});
    }
    return {{"queues", queues}};
}

inline SystemSpec parse_spec(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
    }
    return spec_from_json(j);
}

struct LoadedConfig {
    SystemSpec spec;
    std::string text;  ///< raw bytes, hashed for provenance
};

inline LoadedConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Config, "cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return {parse_spec(buf.str()), buf.str()};
}

} // namespace pollcalc
