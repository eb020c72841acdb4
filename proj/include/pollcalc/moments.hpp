#pragma once

// First and second moments read off Taylor jets at the origin, and the cached
// cycle-time moments used by the mean-value formulas.

#include <cstddef>
#include <optional>
#include <vector>

#include "cycletime.hpp"
#include "model.hpp"
#include "taylor.hpp"

namespace pollcalc {

using Jet = Taylor<3>;

struct Moments {
    double first = 0.0;
    double second = 0.0;

    /// E(X_res) = E(X^2) / (2 E(X))
    double residual_mean() const { return first > 0.0 ? second / (2.0 * first) : 0.0; }
};

/// Moments of a nonnegative random variable from its LST evaluated on a jet.
template <class F>
Moments lst_moments(F&& lst)
{
    const Jet j = lst(Jet::variable(0.0));
    return {-j[1].real(), 2.0 * j[2].real()};
}

/// Factorial moments E(X), E(X(X-1)) of a count from its GF evaluated on a jet at 1.
template <class F>
Moments gf_factorial_moments(F&& gf)
{
    const Jet j = gf(Jet::variable(1.0));
    return {j[1].real(), 2.0 * j[2].real()};
}

/// Cycle-time moments per queue. They depend only on the queue-level
/// aggregates, so refining classes inside a queue leaves them unchanged.
struct CycleMoments {
    std::vector<Moments> begin;      ///< C_j (globally gated: only entry 0)
    std::vector<Moments> complete;   ///< C*_j (empty for globally gated)
    std::vector<std::optional<Moments>> intervisit;  ///< I_j, exhaustive queues only
};

inline CycleMoments cycle_moments(const PollingSystem& sys, const TruncationPolicy& policy = {})
{
    CycleMoments m;
    if (sys.globally_gated()) {
        m.begin.push_back(lst_moments([&](const Jet& w) { return globally_gated_cycle_lst(sys, w, policy); }));
        return m;
    }
    for (std::size_t j = 0; j < sys.size(); ++j) {
        m.begin.push_back(lst_moments([&](const Jet& w) { return cycle_lst_begin(sys, j, w, policy); }));
        m.complete.push_back(lst_moments([&](const Jet& w) { return cycle_lst_complete(sys, j, w, policy); }));
        if (sys.discipline(j) == Discipline::Exhaustive)
            m.intervisit.push_back(lst_moments(
                [&](const Jet& w) { return intervisit_lst(sys, j, w, IntervisitRoute::VisitBeginning, policy); }));
        else
            m.intervisit.push_back(std::nullopt);
    }
    return m;
}

} // namespace pollcalc
