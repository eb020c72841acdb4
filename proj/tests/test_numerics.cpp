#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pollcalc;
using namespace testing_support;

namespace {

TransformFn lst_of(const Distribution& d)
{
    return {[d](complex w) { return d.lst_eval(w); }, TransformKind::Lst, d.mean()};
}

TransformFn poisson_gf(double mean)
{
    return {[mean](complex z) { return std::exp(mean * (z - 1.0)); }, TransformKind::Gf, mean};
}

std::vector<double> grid(double step, int points)
{
    std::vector<double> t;
    for (int k = 1; k <= points; ++k)
        t.push_back(step * k);
    return t;
}

} // namespace

TEST(Derivative, ClosedFormMoments)
{
    EXPECT_NEAR(derivative_at_zero(lst_of(Distribution::exponential(1.0)), 1), 1.0, 1e-7);
    EXPECT_NEAR(derivative_at_zero(lst_of(Distribution::exponential(1.0)), 2), 2.0, 2e-7);
    EXPECT_NEAR(derivative_at_zero(lst_of(Distribution::deterministic(2.0)), 2), 4.0, 4e-7);
    const auto h = Distribution::hyperexponential({0.3, 0.7}, {0.5, 4.0});
    EXPECT_NEAR(derivative_at_zero(lst_of(h), 1) / h.mean(), 1.0, 1e-7);
    EXPECT_NEAR(derivative_at_zero(lst_of(h), 2) / h.second_moment(), 1.0, 1e-7);
}

TEST(Derivative, FactorialMomentsOfAGf)
{
    // Poisson(m): E(X) = m, E(X(X-1)) = m^2
    EXPECT_NEAR(derivative_at_zero(poisson_gf(1.5), 1), 1.5, 1e-7);
    EXPECT_NEAR(derivative_at_zero(poisson_gf(1.5), 2), 2.25, 1e-7);
}

TEST(Derivative, IllConditionedAndDomain)
{
    // |t| has no derivative at the origin
    const TransformFn kink{[](complex w) { return 1.0 / (1.0 + std::sqrt(w * w + 1e-3)); }, TransformKind::Lst, 1.0};
    DifferentiationPolicy p;
    p.relative_step = 0.5;
    p.levels = 3;
    EXPECT_THROW(derivative_at_zero(kink, 2, p), Error);
    EXPECT_THROW(derivative_at_zero(lst_of(Distribution::exponential(1.0)), 3), Error);
}

TEST(InvertLst, ClosedFormCdfs)
{
    const InversionGrid e = invert_lst(lst_of(Distribution::exponential(1.0)), {1.0});
    EXPECT_NEAR(e.values[0], 1.0 - std::exp(-1.0), 1e-7);
    const InversionGrid er = invert_lst(lst_of(Distribution::erlang(2, 1.0)), {2.0});
    EXPECT_NEAR(er.values[0], 1.0 - 3.0 * std::exp(-2.0), 1e-7);
    EXPECT_LT(er.errors[0], 1e-8);
}

TEST(InvertLst, MassAtZero)
{
    // continuous law: nothing at 0, found by extrapolation
    const InversionGrid e = invert_lst(lst_of(Distribution::exponential(1.0)), {0.0});
    EXPECT_NEAR(e.values[0], 0.0, 1e-9);
    // an atom of 0.3 at the origin
    const auto atom = Distribution::mixture({0.3, 0.7}, {Distribution::deterministic(0.0), Distribution::exponential(2.0)});
    EXPECT_NEAR(invert_lst(lst_of(atom), {0.0}).values[0], 0.3, 1e-9);
    TransformFn known = lst_of(atom);
    known.mass_at_zero = 0.3;
    const InversionGrid g = invert_lst(known, {0.0});
    EXPECT_EQ(g.values[0], 0.3);
    EXPECT_EQ(g.errors[0], 0.0);
}

TEST(InvertLst, AccuracyTrigger)
{
    // a jump in the CDF is where Fourier inversion rings
    LstInversionPolicy p;
    p.target = 1e-12;
    EXPECT_THROW(invert_lst(lst_of(Distribution::deterministic(1.0)), {1.0}, p), Error);
    p.strict = false;
    EXPECT_NO_THROW(invert_lst(lst_of(Distribution::deterministic(1.0)), {1.0}, p));
    EXPECT_THROW(invert_lst(poisson_gf(1.0), {1.0}), Error);
    EXPECT_THROW(invert_lst(lst_of(Distribution::exponential(1.0)), {-1.0}), Error);
}

TEST(InvertLst, RoundTripThroughQuadrature)
{
    // re-transform the inverted CDF: f(w) = w int_0^inf e^{-wt} F(t) dt, by Simpson's rule
    for (const auto& d : {Distribution::exponential(1.0), Distribution::erlang(3, 2.0),
                          Distribution::hyperexponential({0.4, 0.6}, {0.5, 3.0}),
                          Distribution::mixture({0.5, 0.5}, {Distribution::erlang(2, 1.0), Distribution::exponential(4.0)})}) {
        const double step = 0.02 * d.mean();
        std::vector<double> t{0.0};
        for (double x : grid(step, 2000))
            t.push_back(x);
        const InversionGrid cdf = invert_lst(lst_of(d), t);
        for (double w : {0.5 / d.mean(), 1.0 / d.mean(), 2.0 / d.mean()}) {
            double acc = 0.0;
            for (std::size_t k = 0; k < t.size(); ++k) {
                const double weight = (k == 0 || k + 1 == t.size()) ? 1.0 : (k % 2 ? 4.0 : 2.0);
                acc += weight * std::exp(-w * t[k]) * cdf.values[k];
            }
            acc = acc * step / 3.0 + std::exp(-w * t.back()) / w;  // F = 1 beyond the grid
            EXPECT_NEAR(w * acc, d.lst_eval(w).real(), 1e-6) << d.family_name();
        }
    }
}

TEST(InvertGf, ClosedForms)
{
    const InversionGrid p = invert_gf(poisson_gf(1.0), 10);
    EXPECT_NEAR(p.values[0], std::exp(-1.0), 1e-10);
    for (int n = 1; n <= 10; ++n)
        EXPECT_NEAR(p.values[static_cast<std::size_t>(n)], std::exp(-1.0) / std::tgamma(n + 1.0), 1e-10);
    const InversionGrid point = invert_gf({[](complex z) { return z; }, TransformKind::Gf, 1.0}, 4);
    const InversionGrid one = invert_gf({[](complex) { return complex(1.0); }, TransformKind::Gf, 1.0}, 4);
    for (int n = 0; n <= 4; ++n) {
        EXPECT_NEAR(point.values[static_cast<std::size_t>(n)], n == 1 ? 1.0 : 0.0, 1e-11);
        EXPECT_NEAR(one.values[static_cast<std::size_t>(n)], n == 0 ? 1.0 : 0.0, 1e-11);
    }
}

TEST(InvertGf, Errors)
{
    // "probabilities" summing to 2
    const TransformFn bad{[](complex z) { return 2.0 * z; }, TransformKind::Gf, 1.0};
    EXPECT_THROW(invert_gf(bad, 3), Error);
    EXPECT_THROW(invert_gf(poisson_gf(1.0), -1), Error);
    GfInversionPolicy p;
    p.radius = 1.5;
    EXPECT_THROW(invert_gf(poisson_gf(1.0), 3, p), Error);
}

TEST(InvertLst, WaitingTimeCdfIsMonotoneWithTheRightMean)
{
    const PollingSystem sys(single_queue(Discipline::Gated, 0.5, Distribution::exponential(1.0), Distribution::exponential(1.0)));
    const double mean = mean_waiting(sys, 0, 0);
    const TransformFn f{[&](complex w) { return waiting_lst(sys, 0, 0, w); }, TransformKind::Lst, mean};
    const double step = mean / 50.0;
    std::vector<double> t{0.0};
    for (double x : grid(step, 1500))
        t.push_back(x);
    const InversionGrid cdf = invert_lst(f, t);
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_GE(cdf.values[k], -1e-8);
        EXPECT_LE(cdf.values[k], 1.0 + 1e-8);
        if (k > 0)
            EXPECT_GE(cdf.values[k], cdf.values[k - 1] - 2e-8);
    }
    EXPECT_NEAR(cdf.values.back(), 1.0, 1e-8);
    EXPECT_NEAR(mean_from_cdf(cdf) / derivative_at_zero(f, 1), 1.0, 1e-4);
}

TEST(Taylor, Arithmetic)
{
    using T = Taylor<4>;
    const T x = T::variable(0.0);
    // 1 / (1 - x) = 1 + x + x^2 + ...
    const T geometric = T(1.0) / (T(1.0) - x);
    for (int k = 0; k <= 4; ++k)
        EXPECT_NEAR(std::abs(geometric[k] - 1.0), 0.0, 1e-15);
    // exp(x) coefficients 1/k!
    const T e = exp(x);
    for (int k = 0; k <= 4; ++k)
        EXPECT_NEAR(e[k].real(), 1.0 / std::tgamma(k + 1.0), 1e-15);
    // (e^x - 1) / x = 1 + x/2 + x^2/6 + ..., one order lost
    const T q = removable_div(exp(x) - 1.0, x);
    EXPECT_EQ(q.order(), 3);
    EXPECT_NEAR(q[1].real(), 0.5, 1e-15);
    EXPECT_NEAR(q[3].real(), 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(std::abs(q.evaluate(0.1) - std::expm1(0.1) / 0.1), 0.0, 1e-5);
}
