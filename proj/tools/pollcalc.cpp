// pollcalc: analyze, simulate, verify, optimize and invert polling systems from a JSON config.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <pollcalc/config.hpp>
#include <pollcalc/pollcalc.hpp>

namespace fs = std::filesystem;
using namespace pollcalc;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_numeric = 1;
constexpr int exit_validation = 2;
constexpr int exit_verify = 3;

struct Options {
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 1;
    // simulation
    int reps = 30;
    long cycles = 20000;
    long warmup = 1000;
    long samples = 0;
    // optimization
    std::size_t queue = 1;
    int max_classes = 4;
    int levels = 200;
    std::vector<std::size_t> symmetric;
    // inversion
    std::size_t cls = 0;
    double t_max = 0.0;
    int points = 101;
    int inv_terms = 40;
    int inv_euler = 12;
    double inv_radius = 0.0;
    int pmf = 0;
};

/// Output files are collected first and written only after every computation succeeded.
using Outputs = std::map<std::string, std::string>;

bool is_validation(ErrorCode c)
{
    switch (c) {
    case ErrorCode::Config:
    case ErrorCode::BadShape:
    case ErrorCode::Unstable:
    case ErrorCode::ZeroSwitchover:
    case ErrorCode::Domain:
    case ErrorCode::EmptyBand:
    case ErrorCode::UnsupportedFamily:
    case ErrorCode::Unsupported: return true;
    default: return false;
    }
}

std::string class_label(std::size_t i, std::size_t k)
{
    return std::to_string(i + 1) + "," + std::to_string(k + 1);
}

CsvTable provenance(const LoadedConfig& cfg, const std::string& command, const Options& opt,
                    const std::vector<std::pair<std::string, std::string>>& extra)
{
    CsvTable t({"key", "value"});
    t.row() << "tool" << "pollcalc";
    t.row() << "version" << std::string(tool_version);
    t.row() << "command" << command;
    t.row() << "config" << fs::path(opt.config).filename().string();
    t.row() << "config_fnv1a64" << hex64(fnv1a64(cfg.text));
    t.row() << "seed" << std::to_string(opt.seed);
    for (const auto& [k, v] : extra)
        t.row() << k << v;
    return t;
}

/// P_1 truncation diagnostics at the all-empty point.
std::vector<std::pair<std::string, std::string>> truncation_diagnostics(const PollingSystem& sys)
{
    const auto d = cycle_start_gf_diagnostic(sys, GfVector<complex>(sys.size(), complex(0.0)));
    return {{"product_terms", std::to_string(d.terms)}, {"product_tail_bound", format_number(d.tail_bound)}};
}

Outputs analyze(const LoadedConfig& cfg, const Options& opt)
{
    const PollingSystem sys(cfg.spec);
    const MeanWaiting mw(sys);
    CsvTable t({"quantity", "value"});
    t.row() << "rho" << sys.load();
    t.row() << "E(S)" << sys.aggregates().switch_mean;
    t.row() << "E(C)" << sys.cycle_mean();
    const auto& m = mw.moments();
    for (std::size_t j = 0; j < m.begin.size(); ++j)
        t.row() << queue_key("E(C^2)", j) << m.begin[j].second;
    for (std::size_t j = 0; j < m.complete.size(); ++j)
        t.row() << queue_key("E(Cstar^2)", j) << m.complete[j].second;
    for (std::size_t j = 0; j < m.intervisit.size(); ++j)
        if (m.intervisit[j]) {
            t.row() << queue_key("E(I)", j) << m.intervisit[j]->first;
            t.row() << queue_key("E(I^2)", j) << m.intervisit[j]->second;
        }
    for (std::size_t i = 0; i < sys.size(); ++i) {
        for (std::size_t k = 0; k < sys.classes(i); ++k) {
            t.row() << class_key("E(W)", i, k) << mw(i, k);
            t.row() << class_key("E(T)", i, k) << mw.sojourn(i, k);
        }
        t.row() << queue_key("E(W)", i) << mw.queue_mean(i);
    }
    t.row() << "P(empty at cycle start)" << cycle_start_gf(sys, GfVector<complex>(sys.size(), complex(0.0))).real();
    t.row() << "conservation_residual" << pseudo_conservation_residual(sys, all_mean_waits(sys, mw));
    return {{"analysis.csv", t.str()},
            {"provenance.csv", provenance(cfg, "analyze", opt, truncation_diagnostics(sys)).str()}};
}

SimulationOptions sim_options(const Options& opt)
{
    SimulationOptions so;
    so.seed = opt.seed;
    so.replications = opt.reps;
    so.cycles = opt.cycles;
    so.warmup = opt.warmup;
    return so;
}

std::vector<std::pair<std::string, std::string>> sim_provenance(const Options& opt)
{
    return {{"replications", std::to_string(opt.reps)},
            {"cycles", std::to_string(opt.cycles)},
            {"warmup", std::to_string(opt.warmup)},
            {"replication_seed_rule", "splitmix64(seed + r)"}};
}

Outputs simulate_cmd(const LoadedConfig& cfg, const Options& opt)
{
    const PollingSystem sys(cfg.spec, Mode::Simulation);
    if (sys.load() >= 1.0)
        std::cerr << "warning: rho = " << sys.load() << " >= 1, estimates will drift with the run length\n";
    const SimulationResult r = simulate(sys, sim_options(opt));
    CsvTable t({"quantity", "estimate", "halfwidth"});
    for (const auto& [name, e] : r.quantities)
        t.row() << name << e.estimate << e.half_width;
    Outputs out{{"simulation.csv", t.str()}, {"provenance.csv", provenance(cfg, "simulate", opt, sim_provenance(opt)).str()}};
    if (opt.samples > 0) {
        WaitSamplingOptions wo;
        wo.seed = opt.seed;
        wo.warmup = opt.warmup;
        CsvTable s({"class", "wait"});
        for (const auto& w : waiting_samples(sys, static_cast<std::size_t>(opt.samples), wo))
            s.row() << class_label(w.queue, w.cls) << w.wait;
        out["waits.csv"] = s.str();
    }
    return out;
}

Outputs verify(const LoadedConfig& cfg, const Options& opt, bool& passed)
{
    const PollingSystem sys(cfg.spec);
    const PollingSystem sim_sys(cfg.spec, Mode::Simulation);
    const MeanWaiting mw(sys);
    const SimulationResult r = simulate(sim_sys, sim_options(opt));

    CsvTable t({"quantity", "analytic", "estimate", "halfwidth", "result"});
    passed = true;
    auto compare = [&](const std::string& name, double analytic) {
        const SimEstimate& e = r.at(name);
        const bool ok = std::abs(analytic - e.estimate) <= 3.0 * e.half_width;
        passed = passed && ok;
        t.row() << name << analytic << e.estimate << e.half_width << ok;
    };
    for (std::size_t i = 0; i < sys.size(); ++i) {
        for (std::size_t k = 0; k < sys.classes(i); ++k)
            compare(class_key("W", i, k), mw(i, k));
        compare(queue_key("W", i), mw.queue_mean(i));
        for (std::size_t k = 0; k < sys.classes(i); ++k)
            compare(class_key("L", i, k), sys.priority_class(i, k).rate * mw.sojourn(i, k));
    }
    const auto& m = mw.moments();
    for (std::size_t j = 0; j < sys.size(); ++j)
        compare(queue_key("C", j), sys.cycle_mean());
    for (std::size_t j = 0; j < m.begin.size(); ++j)
        compare(queue_key("C2", j), m.begin[j].second);
    for (std::size_t j = 0; j < m.complete.size(); ++j)
        compare(queue_key("Cstar2", j), m.complete[j].second);
    for (std::size_t j = 0; j < m.intervisit.size(); ++j)
        if (m.intervisit[j]) {
            compare(queue_key("I", j), m.intervisit[j]->first);
            compare(queue_key("I2", j), m.intervisit[j]->second);
        }
    compare("P(empty at cycle start)", cycle_start_gf(sys, GfVector<complex>(sys.size(), complex(0.0))).real());

    auto extra = sim_provenance(opt);
    for (auto& kv : truncation_diagnostics(sys))
        extra.push_back(kv);
    return {{"verify.csv", t.str()}, {"provenance.csv", provenance(cfg, "verify", opt, extra).str()}};
}

Outputs optimize(const LoadedConfig& cfg, const Options& opt)
{
    const std::size_t i = opt.queue - 1;
    const PollingSystem sys(cfg.spec);
    if (i >= sys.size())
        throw Error(ErrorCode::BadShape, "--queue " + std::to_string(opt.queue) + " is not a queue of this system");
    const auto rows = threshold_sweep(cfg.spec, i, opt.max_classes);

    std::vector<std::string> header{"K"};
    for (int k = 1; k < opt.max_classes; ++k)
        header.push_back("t_" + std::to_string(k));
    header.push_back("overall_mean_wait");
    CsvTable t(header);
    for (const auto& r : rows) {
        auto& row = t.row();
        row << r.classes;
        for (int k = 1; k < opt.max_classes; ++k)
            row << (static_cast<std::size_t>(k) <= r.thresholds.size() ? format_number(r.thresholds[static_cast<std::size_t>(k - 1)])
                                                                       : std::string());
        row << r.value;
    }
    CsvTable sjf({"levels", "overall_mean_wait"});
    sjf.row() << opt.levels << sjf_limit(cfg.spec, i, opt.levels);

    Outputs out{{"thresholds.csv", t.str()}, {"sjf.csv", sjf.str()}};
    if (!opt.symmetric.empty()) {
        // symmetric counterpart: same total rate, queue-1 service, total mean switch-over as a constant
        const auto& service = cfg.spec.queues[0].classes[0].service;
        double total_rate = 0.0;
        for (std::size_t j = 0; j < sys.size(); ++j)
            total_rate += sys.rate(j);
        const auto sweep = symmetric_sweep(opt.symmetric, {Discipline::Gated, Discipline::Exhaustive, Discipline::GloballyGated},
                                           total_rate, service, sys.aggregates().switch_mean);
        CsvTable s({"N", "discipline", "E(W)"});
        for (const auto& r : sweep)
            s.row() << r.queues << std::string(to_string(r.discipline)) << r.mean_wait;
        out["symmetric.csv"] = s.str();
    }
    out["provenance.csv"] = provenance(cfg, "optimize", opt,
                                       {{"queue", std::to_string(opt.queue)}, {"max_classes", std::to_string(opt.max_classes)},
                                        {"levels", std::to_string(opt.levels)}})
                                .str();
    return out;
}

Outputs invert(const LoadedConfig& cfg, const Options& opt)
{
    const PollingSystem sys(cfg.spec);
    const MeanWaiting mw(sys);
    LstInversionPolicy lp;
    lp.terms = opt.inv_terms;
    lp.euler_terms = opt.inv_euler;
    lp.strict = false;
    GfInversionPolicy gp;
    gp.radius = opt.inv_radius;
    if (opt.points < 2)
        throw Error(ErrorCode::Domain, "--points must be at least 2");

    std::vector<std::pair<std::size_t, std::size_t>> targets;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t k = 0; k < sys.classes(i); ++k)
            if ((opt.queue == 0 || opt.queue == i + 1) && (opt.cls == 0 || opt.cls == k + 1))
                targets.emplace_back(i, k);
    if (targets.empty())
        throw Error(ErrorCode::BadShape, "--queue/--class select no class of this system");

    CsvTable cdf({"class", "t", "cdf", "error"});
    CsvTable pmf({"class", "n", "probability", "error"});
    double worst = 0.0;
    for (const auto& [i, k] : targets) {
        const double mean = mw(i, k);
        const double horizon = opt.t_max > 0.0 ? opt.t_max : 10.0 * std::max(mean, sys.cycle_mean());
        std::vector<double> grid;
        for (int p = 0; p < opt.points; ++p)
            grid.push_back(horizon * p / (opt.points - 1));
        const TransformFn f{[&sys, i = i, k = k](complex w) { return waiting_lst(sys, i, k, w); }, TransformKind::Lst,
                            std::max(mean, 1e-3)};
        const InversionGrid g = invert_lst(f, grid, lp);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            cdf.row() << class_label(i, k) << g.abscissae[p] << g.values[p] << g.errors[p];
            worst = std::max(worst, g.errors[p]);
        }
        if (opt.pmf > 0) {
            const TransformFn q{[&sys, i = i, k = k](complex z) { return marginal_queue_length_gf(sys, i, k, z); },
                                TransformKind::Gf, 1.0};
            const InversionGrid h = invert_gf(q, opt.pmf - 1, gp);
            for (std::size_t n = 0; n < h.values.size(); ++n)
                pmf.row() << class_label(i, k) << static_cast<int>(n) << h.values[n] << h.errors[n];
        }
    }
    if (worst > lp.target)
        std::cerr << "warning: largest inversion error estimate " << format_number(worst) << " exceeds "
                  << format_number(lp.target) << "\n";
    Outputs out{{"cdf.csv", cdf.str()}};
    if (opt.pmf > 0)
        out["pmf.csv"] = pmf.str();
    out["provenance.csv"] =
        provenance(cfg, "invert", opt,
                   {{"inv_terms", std::to_string(opt.inv_terms)}, {"inv_euler", std::to_string(opt.inv_euler)},
                    {"inv_radius", format_number(opt.inv_radius)}, {"max_error_estimate", format_number(worst)}})
            .str();
    return out;
}

void write_outputs(const fs::path& dir, const Outputs& files)
{
    fs::create_directories(dir);
    for (const auto& [name, content] : files) {
        std::ofstream os(dir / name, std::ios::binary);
        os << content;
        if (!os)
            throw std::runtime_error("cannot write " + (dir / name).string());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact analysis and simulation of cyclic polling systems with priority levels"};
    app.set_version_flag("--version", std::string(tool_version));
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON system configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (created if missing)");
        sub->add_option("--seed", opt.seed, "master random seed");
    };
    auto sim_flags = [&](CLI::App* sub) {
        sub->add_option("--reps", opt.reps, "replications")->check(CLI::Range(10, 100000));
        sub->add_option("--cycles", opt.cycles, "measured cycles per replication")->check(CLI::PositiveNumber);
        sub->add_option("--warmup", opt.warmup, "discarded warm-up cycles")->check(CLI::NonNegativeNumber);
    };

    auto* an = app.add_subcommand("analyze", "analytic means, cycle moments and conservation residual");
    common(an);
    auto* si = app.add_subcommand("simulate", "simulation estimates with 95% confidence half-widths");
    common(si);
    sim_flags(si);
    si->add_option("--samples", opt.samples, "also dump this many per-customer waits")->check(CLI::NonNegativeNumber);
    auto* ve = app.add_subcommand("verify", "analytic values against simulation, 3 half-width rule");
    common(ve);
    sim_flags(ve);
    auto* op = app.add_subcommand("optimize", "threshold priorities and the shortest-job-first limit");
    common(op);
    op->add_option("--queue", opt.queue, "queue to split (1-based)")->check(CLI::PositiveNumber);
    op->add_option("--K", opt.max_classes, "largest number of classes")->check(CLI::Range(1, 16));
    op->add_option("--levels", opt.levels, "bands for the SJF limit")->check(CLI::Range(50, 100000));
    op->add_option("--symmetric", opt.symmetric, "also tabulate symmetric systems with these N")->delimiter(',');
    auto* in = app.add_subcommand("invert", "waiting-time CDFs (and queue-length pmfs)");
    common(in);
    in->add_option("--queue", opt.queue, "queue (1-based, 0 = all)");
    in->add_option("--class", opt.cls, "class (1-based, 0 = all)");
    in->add_option("--t-max", opt.t_max, "grid end (default 10 max(E(W), E(C)))")->check(CLI::NonNegativeNumber);
    in->add_option("--points", opt.points, "grid points");
    in->add_option("--inv-terms", opt.inv_terms, "series terms in the LST inversion")->check(CLI::Range(2, 10000));
    in->add_option("--inv-euler", opt.inv_euler, "Euler-averaged terms")->check(CLI::Range(1, 1000));
    in->add_option("--inv-radius", opt.inv_radius, "GF inversion radius (0 = automatic)")->check(CLI::Range(0.0, 1.0));
    in->add_option("--pmf", opt.pmf, "also invert queue-length pmfs up to this many points")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }
    // the invert subcommand treats queue 0 as "all"
    if (in->parsed() && in->count("--queue") == 0)
        opt.queue = 0;

    try {
        const LoadedConfig cfg = load_config(opt.config);
        Outputs out;
        int rc = exit_ok;
        if (an->parsed()) {
            out = analyze(cfg, opt);
        } else if (si->parsed()) {
            out = simulate_cmd(cfg, opt);
        } else if (ve->parsed()) {
            bool passed = false;
            out = verify(cfg, opt, passed);
            if (!passed) {
                std::cerr << "verify: at least one quantity lies outside 3 confidence half-widths\n";
                rc = exit_verify;
            }
        } else if (op->parsed()) {
            out = optimize(cfg, opt);
        } else {
            out = invert(cfg, opt);
        }
        write_outputs(opt.out, out);
        for (const auto& [name, content] : out)
            if (name != "provenance.csv")
                std::cout << (fs::path(opt.out) / name).string() << "\n";
        return rc;
    } catch (const Error& e) {
        std::cerr << "pollcalc: " << e.what() << "\n";
        return is_validation(e.code()) ? exit_validation : exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "pollcalc: " << e.what() << "\n";
        return exit_numeric;
    }
}
