#pragma once

// Discrete-event simulation of a cyclic polling system with priority classes.
//
// One replication is single-threaded and deterministic given its seed;
// replications run in parallel on independent streams and are merged in
// replication order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <optional>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "error.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace pollcalc {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of replication r: splitmix64 applied to master seed + r.
inline std::uint64_t replication_seed(std::uint64_t master, std::size_t r)
{
    return splitmix64(master + static_cast<std::uint64_t>(r));
}

struct SimEstimate {
    double estimate = 0.0;
    double half_width = 0.0;  ///< 95% confidence
    int replications = 0;
    long cycles = 0;
    long warmup = 0;

    bool covers(double x, double widths = 3.0) const { return std::abs(x - estimate) <= widths * half_width; }
};

/// A completed customer, as seen by an observer.
struct JobRecord {
    std::size_t queue = 0;
    std::size_t cls = 0;
    double arrival = 0.0;
    double service = 0.0;
    double service_start = 0.0;
    double departure = 0.0;
    int preemptions = 0;
};

struct ScriptedArrival {
    double time = 0.0;
    std::size_t queue = 0;
    std::size_t cls = 0;
    double service = 0.0;
};

struct SimulationOptions {
    std::uint64_t seed = 1;
    int replications = 30;
    /// Measurement window in cycles (visit beginnings to the first queue).
    long cycles = 20000;
    long warmup = 1000;
    /// When positive the window is [warmup_time, warmup_time + horizon] in time instead.
    double horizon = 0.0;
    double warmup_time = 0.0;
    /// Record P(L_ik = n) for n below this bound (0 disables).
    int histogram_levels = 0;
    unsigned threads = 0;
};

struct SimulationResult {
    std::vector<std::pair<std::string, SimEstimate>> quantities;

    const SimEstimate& at(const std::string& name) const
    {
        for (const auto& [n, e] : quantities)
            if (n == name)
                return e;
        throw Error(ErrorCode::Domain, "no simulated quantity named " + name);
    }
    bool contains(const std::string& name) const
    {
        return std::any_of(quantities.begin(), quantities.end(), [&](const auto& q) { return q.first == name; });
    }
};

/// Quantity names use 1-based queue and class indices.
inline std::string class_key(const char* what, std::size_t i, std::size_t k)
{
    return std::string(what) + "[" + std::to_string(i + 1) + "," + std::to_string(k + 1) + "]";
}
inline std::string queue_key(const char* what, std::size_t i)
{
    return std::string(what) + "[" + std::to_string(i + 1) + "]";
}

namespace detail {

/// Per-replication tallies.
struct Tally {
    std::vector<double> wait_sum;
    std::vector<long> wait_count;
    std::vector<double> cycle_sum, cycle_sq;
    std::vector<long> cycle_count;
    std::vector<double> complete_sum, complete_sq;
    std::vector<long> complete_count;
    std::vector<double> inter_sum, inter_sq;
    std::vector<long> inter_count;
    std::vector<double> area;
    std::vector<std::vector<double>> level_time;
    long starts = 0;
    long empty_starts = 0;
    std::vector<double> start_count;
    std::vector<double> start_cross;  ///< row-major class x class
    double window = 0.0;
};

class Replication {
public:
    Replication(const PollingSystem& sys, const SimulationOptions& opt, std::uint64_t seed)
        : sys_(sys), opt_(opt), rng_(seed)
    {
        const std::size_t n = sys.size();
        for (std::size_t i = 0; i < n; ++i) {
            offset_.push_back(classes_);
            classes_ += sys.classes(i);
        }
        queues_.resize(classes_);
        in_system_.assign(classes_, 0);
        last_change_.assign(classes_, 0.0);
        gate_.assign(classes_, 0);
        last_begin_.assign(n, -1.0);
        last_complete_.assign(n, -1.0);
        begin_in_window_.assign(n, false);
        complete_in_window_.assign(n, false);

        all_deterministic_ = true;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& so = sys.queue(i).switch_over;
            if (!std::holds_alternative<Deterministic>(so.family()))
                all_deterministic_ = false;
            switch_total_ += so.mean();
        }

        auto& t = tally_;
        t.wait_sum.assign(classes_, 0.0);
        t.wait_count.assign(classes_, 0);
        t.cycle_sum.assign(n, 0.0);
        t.cycle_sq.assign(n, 0.0);
        t.cycle_count.assign(n, 0);
        t.complete_sum.assign(n, 0.0);
        t.complete_sq.assign(n, 0.0);
        t.complete_count.assign(n, 0);
        t.inter_sum.assign(n, 0.0);
        t.inter_sq.assign(n, 0.0);
        t.inter_count.assign(n, 0);
        t.area.assign(classes_, 0.0);
        t.level_time.assign(classes_, std::vector<double>(static_cast<std::size_t>(std::max(opt.histogram_levels, 0)), 0.0));
        t.start_count.assign(classes_, 0.0);
        t.start_cross.assign(classes_ * classes_, 0.0);
    }

    std::function<void(const JobRecord&)> on_departure;
    /// (queue, class, wait, arrived inside the measurement window)
    std::function<void(std::size_t, std::size_t, double, bool)> on_wait;

    /// Random arrivals; stops when the window is over and every customer
    /// that arrived in it has entered service.
    Tally run()
    {
        for (std::size_t i = 0; i < sys_.size(); ++i)
            for (std::size_t k = 0; k < sys_.classes(i); ++k)
                schedule_random_arrival(i, k, 0.0);
        if (opt_.horizon > 0.0 && opt_.warmup_time <= 0.0)
            open_window(0.0);
        start_visit(0, 0.0);
        while (!(window_done_ && pending_ == 0)) {
            if (!step())
                break;
        }
        return std::move(tally_);
    }

    /// Scripted arrivals only; runs until all scripted jobs have departed.
    void run_script(std::vector<ScriptedArrival> script, double max_time)
    {
        std::stable_sort(script.begin(), script.end(),
                         [](const ScriptedArrival& a, const ScriptedArrival& b) { return a.time < b.time; });
        script_remaining_ = script.size();
        for (const auto& a : script) {
            if (a.queue >= sys_.size() || a.cls >= sys_.classes(a.queue))
                throw Error(ErrorCode::BadShape, "scripted arrival refers to an unknown class");
            arrivals_.push({a.time, next_seq_++, a.queue, a.cls, a.service, false});
        }
        open_window(0.0);
        start_visit(0, 0.0);
        while ((script_remaining_ > 0 || jobs_in_system_ > 0) && now_ <= max_time) {
            if (!step())
                break;
        }
    }

private:
    struct Job {
        double arrival;
        double remaining;
        double service;
        double started = -1.0;
        bool counted = false;
        int preemptions = 0;
    };

    struct Arrival {
        double time;
        std::uint64_t seq;
        std::size_t queue;
        std::size_t cls;
        double service;
        bool random;
        bool operator>(const Arrival& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    enum class Phase { Switching, Serving };

    std::size_t cid(std::size_t i, std::size_t k) const { return offset_[i] + k; }

    void schedule_random_arrival(std::size_t i, std::size_t k, double from)
    {
        const auto& c = sys_.priority_class(i, k);
        if (c.rate <= 0.0)
            return;
        const double gap = -std::log1p(-uniform01(rng_)) / c.rate;
        arrivals_.push({from + gap, next_seq_++, i, k, c.service.sample(rng_), true});
    }

    bool step()
    {
        const bool have_arrival = !arrivals_.empty();
        const double t_arr = have_arrival ? arrivals_.top().time : std::numeric_limits<double>::infinity();
        const bool arrival_first =
            have_arrival && (t_arr < server_time_ || (t_arr == server_time_ && arrivals_.top().seq < server_seq_));
        const double t = arrival_first ? t_arr : server_time_;
        if (!std::isfinite(t))
            return false;
        if (opt_.horizon > 0.0) {
            if (!window_open_ && !window_done_ && t >= opt_.warmup_time)
                open_window(opt_.warmup_time);
            if (window_open_ && t >= opt_.warmup_time + opt_.horizon)
                close_window(opt_.warmup_time + opt_.horizon);
        }
        now_ = t;
        if (arrival_first) {
            const Arrival a = arrivals_.top();
            arrivals_.pop();
            handle_arrival(a);
        } else {
            handle_server_event();
        }
        return true;
    }

    void change_count(std::size_t c, int delta)
    {
        if (window_open_) {
            const double dt = now_ - last_change_[c];
            tally_.area[c] += in_system_[c] * dt;
            auto& lv = tally_.level_time[c];
            if (!lv.empty() && static_cast<std::size_t>(in_system_[c]) < lv.size())
                lv[static_cast<std::size_t>(in_system_[c])] += dt;
        }
        last_change_[c] = now_;
        in_system_[c] += delta;
        jobs_in_system_ += delta;
    }

    void open_window(double t)
    {
        window_open_ = true;
        window_start_ = t;
        for (auto& l : last_change_)
            l = t;
    }

    void close_window(double t)
    {
        const double saved = now_;
        now_ = t;
        for (std::size_t c = 0; c < classes_; ++c)
            change_count(c, 0);
        now_ = saved;
        tally_.window = t - window_start_;
        window_open_ = false;
        window_done_ = true;
    }

    void handle_arrival(const Arrival& a)
    {
        if (a.random)
            schedule_random_arrival(a.queue, a.cls, a.time);
        else
            --script_remaining_;
        const std::size_t c = cid(a.queue, a.cls);
        Job job{a.time, a.service, a.service};
        job.counted = window_open_;
        if (job.counted)
            ++pending_;
        change_count(c, +1);
        queues_[c].push_back(job);

        // a higher class preempts the job in service at its own queue
        if (phase_ == Phase::Serving && position_ == a.queue &&
            sys_.queue(a.queue).preemption == Preemption::PreemptiveResume && a.cls < serving_cls_) {
            Job& cur = current_;
            cur.remaining -= now_ - segment_start_;
            if (cur.remaining < 0.0)
                cur.remaining = 0.0;
            ++cur.preemptions;
            queues_[cid(position_, serving_cls_)].push_front(cur);
            begin_service(a.cls);
        }
    }

    void handle_server_event()
    {
        if (phase_ == Phase::Switching) {
            start_visit((position_ + 1) % sys_.size(), now_);
            return;
        }
        // service completion
        const std::size_t c = cid(position_, serving_cls_);
        change_count(c, -1);
        if (on_departure)
            on_departure({position_, serving_cls_, current_.arrival, current_.service, current_.started, now_,
                          current_.preemptions});
        next_service();
    }

    void start_visit(std::size_t i, double t)
    {
        position_ = i;
        if (i == 0)
            on_cycle_start(t);
        record_visit_begin(i, t);
        const Discipline d = sys_.discipline(i);
        if (d == Discipline::Gated)
            for (std::size_t k = 0; k < sys_.classes(i); ++k)
                gate_[cid(i, k)] = static_cast<long>(queues_[cid(i, k)].size());
        next_service();
    }

    void on_cycle_start(double t)
    {
        ++cycles_started_;
        if (opt_.horizon <= 0.0) {
            if (!window_open_ && !window_done_ && cycles_started_ > opt_.warmup)
                open_window(t);
            else if (window_open_ && cycles_started_ > opt_.warmup + opt_.cycles)
                close_window(t);
        }
        if (sys_.globally_gated())
            for (std::size_t c = 0; c < classes_; ++c)
                gate_[c] = static_cast<long>(queues_[c].size());
        if (window_open_) {
            ++tally_.starts;
            if (jobs_in_system_ == 0)
                ++tally_.empty_starts;
            for (std::size_t c = 0; c < classes_; ++c) {
                const double nc = static_cast<double>(queues_[c].size());
                tally_.start_count[c] += nc;
                for (std::size_t d = 0; d < classes_; ++d)
                    tally_.start_cross[c * classes_ + d] += nc * static_cast<double>(queues_[d].size());
            }
        }
    }

    void record_visit_begin(std::size_t i, double t)
    {
        if (last_begin_[i] >= 0.0 && begin_in_window_[i] && window_open_) {
            const double c = t - last_begin_[i];
            tally_.cycle_sum[i] += c;
            tally_.cycle_sq[i] += c * c;
            ++tally_.cycle_count[i];
        }
        if (last_complete_[i] >= 0.0 && complete_in_window_[i] && window_open_) {
            const double v = t - last_complete_[i];
            tally_.inter_sum[i] += v;
            tally_.inter_sq[i] += v * v;
            ++tally_.inter_count[i];
        }
        last_begin_[i] = t;
        begin_in_window_[i] = window_open_;
    }

    void record_visit_complete(std::size_t i, double t)
    {
        if (last_complete_[i] >= 0.0 && complete_in_window_[i] && window_open_) {
            const double c = t - last_complete_[i];
            tally_.complete_sum[i] += c;
            tally_.complete_sq[i] += c * c;
            ++tally_.complete_count[i];
        }
        last_complete_[i] = t;
        complete_in_window_[i] = window_open_;
    }

    /// Pick the next customer at the current queue, or end the visit.
    void next_service()
    {
        const std::size_t i = position_;
        const Discipline d = sys_.discipline(i);
        for (std::size_t k = 0; k < sys_.classes(i); ++k) {
            const std::size_t c = cid(i, k);
            if (queues_[c].empty())
                continue;
            if (d == Discipline::Exhaustive) {
                begin_service(k);
                return;
            }
            if (gate_[c] > 0) {
                --gate_[c];
                begin_service(k);
                return;
            }
        }
        record_visit_complete(i, now_);
        begin_switch(i);
    }

    void begin_service(std::size_t k)
    {
        const std::size_t c = cid(position_, k);
        current_ = queues_[c].front();
        queues_[c].pop_front();
        if (current_.started < 0.0) {
            current_.started = now_;
            const double w = now_ - current_.arrival;
            if (current_.counted) {
                tally_.wait_sum[c] += w;
                ++tally_.wait_count[c];
                --pending_;
            }
            if (on_wait)
                on_wait(position_, k, w, current_.counted);
        }
        phase_ = Phase::Serving;
        serving_cls_ = k;
        segment_start_ = now_;
        set_server_event(now_ + current_.remaining);
    }

    void begin_switch(std::size_t i)
    {
        phase_ = Phase::Switching;
        if (jobs_in_system_ == 0 && all_deterministic_ && fast_forward(i))
            return;
        set_server_event(now_ + sys_.queue(i).switch_over.sample(rng_));
    }

    /// With deterministic switch-overs and an empty system the server runs
    /// identical empty cycles until the next arrival; skip whole ones.
    bool fast_forward(std::size_t i)
    {
        const double next_arrival = arrivals_.empty() ? std::numeric_limits<double>::infinity() : arrivals_.top().time;
        if (switch_total_ <= 0.0) {
            // nothing to switch over: wait for the next customer
            if (!std::isfinite(next_arrival))
                return false;
            set_server_event(next_arrival);
            return true;
        }
        double room = (next_arrival - now_) / switch_total_;
        if (opt_.horizon > 0.0) {
            const double boundary = window_done_ ? std::numeric_limits<double>::infinity()
                                    : window_open_ ? opt_.warmup_time + opt_.horizon
                                                   : opt_.warmup_time;
            room = std::min(room, (boundary - now_) / switch_total_);
        } else {
            return false;
        }
        if (!(room >= 3.0))
            return false;
        const long k = static_cast<long>(std::min(room - 1.0, 1e15));
        // first cycle event by event so every queue's previous epochs are closed out
        double t = now_;
        const std::size_t n = sys_.size();
        for (std::size_t step = 1; step <= n; ++step) {
            const std::size_t from = (i + step - 1) % n;
            const std::size_t to = (i + step) % n;
            t += sys_.queue(from).switch_over.mean();
            now_ = t;
            position_ = to;
            if (to == 0)
                on_cycle_start(t);
            record_visit_begin(to, t);
            record_visit_complete(to, t);
        }
        // the remaining k - 1 cycles are identical: every epoch repeats after switch_total_
        const long more = k - 1;
        if (window_open_ && more > 0) {
            const double s = switch_total_;
            for (std::size_t j = 0; j < n; ++j) {
                tally_.cycle_sum[j] += more * s;
                tally_.cycle_sq[j] += more * s * s;
                tally_.cycle_count[j] += more;
                tally_.complete_sum[j] += more * s;
                tally_.complete_sq[j] += more * s * s;
                tally_.complete_count[j] += more;
                tally_.inter_sum[j] += more * s;
                tally_.inter_sq[j] += more * s * s;
                tally_.inter_count[j] += more;
            }
            tally_.starts += more;
            tally_.empty_starts += more;
        }
        cycles_started_ += more;
        const double shift = more * switch_total_;
        for (std::size_t j = 0; j < n; ++j) {
            last_begin_[j] += shift;
            last_complete_[j] += shift;
        }
        now_ = t + shift;
        position_ = i;
        set_server_event(now_ + sys_.queue(i).switch_over.sample(rng_));
        return true;
    }

    void set_server_event(double t)
    {
        server_time_ = t;
        server_seq_ = next_seq_++;
    }

    const PollingSystem& sys_;
    const SimulationOptions& opt_;
    std::mt19937_64 rng_;

    std::size_t classes_ = 0;
    std::vector<std::size_t> offset_;
    std::vector<std::deque<Job>> queues_;
    std::vector<long> in_system_;
    std::vector<double> last_change_;
    std::vector<long> gate_;
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> arrivals_;

    double now_ = 0.0;
    double server_time_ = std::numeric_limits<double>::infinity();
    std::uint64_t server_seq_ = 0;
    std::uint64_t next_seq_ = 0;
    Phase phase_ = Phase::Switching;
    std::size_t position_ = 0;
    std::size_t serving_cls_ = 0;
    Job current_{};
    double segment_start_ = 0.0;
    long jobs_in_system_ = 0;

    bool all_deterministic_ = false;
    double switch_total_ = 0.0;

    std::vector<double> last_begin_, last_complete_;
    std::vector<bool> begin_in_window_, complete_in_window_;
    long cycles_started_ = 0;
    bool window_open_ = false;
    bool window_done_ = false;
    double window_start_ = 0.0;
    long pending_ = 0;
    std::size_t script_remaining_ = 0;

    Tally tally_;
};

inline double safe_ratio(double a, double b) { return b > 0.0 ? a / b : std::numeric_limits<double>::quiet_NaN(); }

/// Named per-replication values, in a fixed order.
inline std::vector<std::pair<std::string, double>> summarize(const PollingSystem& sys, const Tally& t,
                                                             int histogram_levels)
{
    std::vector<std::pair<std::string, double>> out;
    std::size_t c = 0;
    double weighted = 0.0;
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        offsets.push_back(c);
        double qsum = 0.0;
        long qcount = 0;
        for (std::size_t k = 0; k < sys.classes(i); ++k, ++c) {
            const double w = safe_ratio(t.wait_sum[c], static_cast<double>(t.wait_count[c]));
            out.emplace_back(class_key("W", i, k), w);
            qsum += t.wait_sum[c];
            qcount += t.wait_count[c];
            const auto& pc = sys.priority_class(i, k);
            if (pc.rate > 0.0)
                weighted += pc.rate * pc.service.mean() * w;
        }
        out.emplace_back(queue_key("W", i), safe_ratio(qsum, static_cast<double>(qcount)));
    }
    c = 0;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t k = 0; k < sys.classes(i); ++k, ++c) {
            out.emplace_back(class_key("L", i, k), safe_ratio(t.area[c], t.window));
            for (int n = 0; n < histogram_levels; ++n)
                out.emplace_back(class_key("P(L=", i, k) + std::to_string(n) + ")",
                                 safe_ratio(t.level_time[c][static_cast<std::size_t>(n)], t.window));
        }
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const double nc = static_cast<double>(t.cycle_count[i]);
        out.emplace_back(queue_key("C", i), safe_ratio(t.cycle_sum[i], nc));
        out.emplace_back(queue_key("C2", i), safe_ratio(t.cycle_sq[i], nc));
        const double nk = static_cast<double>(t.complete_count[i]);
        out.emplace_back(queue_key("Cstar", i), safe_ratio(t.complete_sum[i], nk));
        out.emplace_back(queue_key("Cstar2", i), safe_ratio(t.complete_sq[i], nk));
        const double ni = static_cast<double>(t.inter_count[i]);
        out.emplace_back(queue_key("I", i), safe_ratio(t.inter_sum[i], ni));
        out.emplace_back(queue_key("I2", i), safe_ratio(t.inter_sq[i], ni));
    }
    out.emplace_back("P(empty at cycle start)", safe_ratio(static_cast<double>(t.empty_starts), static_cast<double>(t.starts)));
    const std::size_t total = t.start_count.size();
    c = 0;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t k = 0; k < sys.classes(i); ++k, ++c)
            out.emplace_back(class_key("N0", i, k), safe_ratio(t.start_count[c], static_cast<double>(t.starts)));
    std::size_t a = 0;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t k = 0; k < sys.classes(i); ++k, ++a) {
            std::size_t b = 0;
            for (std::size_t j = 0; j < sys.size(); ++j)
                for (std::size_t l = 0; l < sys.classes(j); ++l, ++b)
                    if (b >= a)
                        out.emplace_back("N0N0[" + std::to_string(i + 1) + "," + std::to_string(k + 1) + ";" +
                                             std::to_string(j + 1) + "," + std::to_string(l + 1) + "]",
                                         safe_ratio(t.start_cross[a * total + b], static_cast<double>(t.starts)));
        }
    out.emplace_back("sum rho W", weighted);
    return out;
}

} // namespace detail

inline SimulationResult simulate(const PollingSystem& sys, const SimulationOptions& opt = {})
{
    if (opt.replications < 10)
        throw Error(ErrorCode::Domain, "need at least 10 replications for a confidence interval");
    if (opt.horizon <= 0.0 && opt.cycles < 1)
        throw Error(ErrorCode::Domain, "measurement window must contain at least one cycle");
    const std::size_t reps = static_cast<std::size_t>(opt.replications);
    std::vector<std::vector<std::pair<std::string, double>>> per_rep(reps);
    detail::parallel_for(reps, opt.threads ? opt.threads : default_threads(), [&](std::size_t r) {
        detail::Replication rep(sys, opt, replication_seed(opt.seed, r));
        per_rep[r] = detail::summarize(sys, rep.run(), opt.histogram_levels);
    });

    const boost::math::students_t dist(static_cast<double>(reps - 1));
    const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
    SimulationResult result;
    for (std::size_t q = 0; q < per_rep[0].size(); ++q) {
        double sum = 0.0, sq = 0.0;
        int n = 0;
        for (const auto& rep : per_rep) {
            const double v = rep[q].second;
            if (std::isnan(v))
                continue;
            sum += v;
            sq += v * v;
            ++n;
        }
        SimEstimate e;
        e.replications = n;
        e.cycles = opt.cycles;
        e.warmup = opt.warmup;
        if (n == 0) {
            e.estimate = std::numeric_limits<double>::quiet_NaN();
        } else {
            e.estimate = sum / n;
            if (n > 1) {
                const double var = std::max(0.0, (sq - sum * sum / n) / (n - 1));
                const boost::math::students_t dn(static_cast<double>(n - 1));
                const double t = n == static_cast<int>(reps) ? tq
                                                              : boost::math::quantile(boost::math::complement(dn, 0.025));
                e.half_width = t * std::sqrt(var / n);
            }
        }
        result.quantities.emplace_back(per_rep[0][q].first, e);
    }
    return result;
}

struct WaitSample {
    std::size_t queue;
    std::size_t cls;
    double wait;
};

struct WaitSamplingOptions {
    std::uint64_t seed = 1;
    long warmup = 1000;
    /// Each eligible customer is kept independently with this probability,
    /// which spreads the sample over many cycles.
    double keep_probability = 1.0;
    /// Restrict to one class (queue, class); empty means all classes.
    std::optional<std::pair<std::size_t, std::size_t>> only;
};

/// n per-customer waiting times after a warm-up of `warmup` cycles.
inline std::vector<WaitSample> waiting_samples(const PollingSystem& sys, std::size_t n,
                                               const WaitSamplingOptions& opt = {})
{
    if (!(opt.keep_probability > 0.0 && opt.keep_probability <= 1.0))
        throw Error(ErrorCode::Domain, "keep probability must lie in (0, 1]");
    SimulationOptions so;
    so.seed = opt.seed;
    so.warmup = opt.warmup;
    so.cycles = std::numeric_limits<long>::max() / 4;
    std::vector<WaitSample> out;
    if (n == 0)
        return out;
    out.reserve(n);
    std::mt19937_64 thin(splitmix64(opt.seed ^ 0x7468696E6E696E67ULL));
    struct Done {};
    detail::Replication rep(sys, so, replication_seed(opt.seed, 0));
    rep.on_wait = [&](std::size_t q, std::size_t k, double w, bool counted) {
        if (!counted)
            return;
        if (opt.only && (opt.only->first != q || opt.only->second != k))
            return;
        if (opt.keep_probability < 1.0 && detail::uniform01(thin) >= opt.keep_probability)
            return;
        out.push_back({q, k, w});
        if (out.size() >= n)
            throw Done{};
    };
    try {
        rep.run();
    } catch (const Done&) {
    }
    return out;
}

/// Run a scripted arrival pattern and return the completed jobs in departure order.
inline std::vector<JobRecord> simulate_trace(const PollingSystem& sys, std::vector<ScriptedArrival> script,
                                             double max_time = 1e9, std::uint64_t seed = 1)
{
    SimulationOptions so;
    so.seed = seed;
    std::vector<JobRecord> jobs;
    detail::Replication rep(sys, so, seed);
    rep.on_departure = [&](const JobRecord& j) { jobs.push_back(j); };
    rep.run_script(std::move(script), max_time);
    return jobs;
}

} // namespace pollcalc
