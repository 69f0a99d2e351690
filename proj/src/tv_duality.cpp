#include "drlsvi/tv_duality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace drlsvi::tv {

namespace {

constexpr double kProbabilityTolerance = 1e-9;

double clamp_value(double v, double cap) {
    if (!std::isfinite(v) || v < -kRangeSlack || v > cap + kRangeSlack) {
        throw std::invalid_argument("tv: value outside [0, H]");
    }
    return std::clamp(v, 0.0, cap);
}

std::vector<double> checked_values(std::span<const double> values, double cap) {
    if (values.empty()) throw std::invalid_argument("tv: empty value vector");
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [cap](double v) { return clamp_value(v, cap); });
    return out;
}

void check_probs(std::span<const double> probs, std::size_t size) {
    if (probs.size() != size) throw std::invalid_argument("tv: probs and values differ in size");
    double total = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < -kProbabilityTolerance) {
            throw std::invalid_argument("tv: negative or non-finite probability");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
        throw std::invalid_argument("tv: probabilities do not sum to 1");
    }
}

void check_rho(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("tv: rho must lie in [0,1]");
}

/// Exact maximization of f(alpha) = sum_t c_t min(v_t, alpha) - rho * alpha
/// over [lo, hi] by evaluating every breakpoint once.
DualSolution maximize_over_breakpoints(std::vector<WeightedValue> terms, double rho, double lo,
                                       double hi) {
    std::sort(terms.begin(), terms.end(),
              [](const WeightedValue& x, const WeightedValue& y) { return x.value < y.value; });

    // Group equal values; prefix sums of c*v run forward and suffix sums of c
    // run backward so the tail beyond the last value is exactly zero.
    std::vector<double> group_value;
    std::vector<double> group_coef;
    std::vector<double> group_weighted;
    for (const auto& t : terms) {
        if (group_value.empty() || t.value != group_value.back()) {
            group_value.push_back(t.value);
            group_coef.push_back(0.0);
            group_weighted.push_back(0.0);
        }
        group_coef.back() += t.coefficient;
        group_weighted.back() += t.coefficient * t.value;
    }
    const std::size_t m = group_value.size();
    std::vector<double> prefix_weighted(m + 1, 0.0);
    for (std::size_t j = 0; j < m; ++j) prefix_weighted[j + 1] = prefix_weighted[j] + group_weighted[j];
    std::vector<double> suffix_coef(m + 1, 0.0);
    for (std::size_t j = m; j-- > 0;) suffix_coef[j] = suffix_coef[j + 1] + group_coef[j];

    std::size_t below = 0;  // groups with value <= alpha
    auto objective = [&](double alpha) {
        while (below < m && group_value[below] <= alpha) ++below;
        return prefix_weighted[below] + alpha * suffix_coef[below] - rho * alpha;
    };

    DualSolution best{objective(lo), lo};
    for (std::size_t j = 0; j < m; ++j) {
        const double alpha = group_value[j];
        if (alpha <= lo || alpha >= hi) continue;
        const double f = objective(alpha);
        if (f > best.value) best = {f, alpha};
    }
    if (hi > lo) {
        const double f_hi = objective(hi);
        if (f_hi > best.value || (!terms.empty() && f_hi == best.value)) best = {f_hi, hi};
    }
    return best;
}

}  // namespace

double WeightedValueList::evaluate(double alpha) const {
    double total = 0.0;
    for (const auto& t : terms) total += t.coefficient * std::min(t.value, alpha);
    return total;
}

DualSolution ridge_dual_sweep(std::span<const WeightedValue> terms, double rho, double cap) {
    check_rho(rho);
    if (!(cap >= 0.0)) throw std::invalid_argument("ridge_dual_sweep: cap must be nonnegative");
    std::vector<WeightedValue> clamped(terms.begin(), terms.end());
    for (auto& t : clamped) {
        if (!std::isfinite(t.coefficient)) {
            throw std::invalid_argument("ridge_dual_sweep: non-finite coefficient");
        }
        t.value = clamp_value(t.value, cap);
    }
    return maximize_over_breakpoints(std::move(clamped), rho, 0.0, cap);
}

double tv_worst_case_expectation(std::span<const double> values, std::span<const double> probs,
                                 double rho, double cap) {
    check_rho(rho);
    const auto v = checked_values(values, cap);
    check_probs(probs, v.size());

    const auto [min_it, max_it] = std::minmax_element(v.begin(), v.end());
    const double v_min = *min_it;
    const double v_max = *max_it;

    // On [v_min, v_max] the inner min_s [V(s)]_alpha equals v_min, so the dual
    // objective is sum_s p_s min(V_s, alpha) - rho * alpha + rho * v_min.
    std::vector<WeightedValue> terms(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) terms[s] = {probs[s], v[s]};
    const DualSolution sol = maximize_over_breakpoints(std::move(terms), rho, v_min, v_max);
    return sol.value + rho * v_min;
}

DualSolution tv_dual_fail_state(std::span<const double> values, std::span<const double> probs,
                                double rho, double cap) {
    check_rho(rho);
    const auto v = checked_values(values, cap);
    check_probs(probs, v.size());
    if (*std::min_element(values.begin(), values.end()) > kRangeSlack) {
        throw std::invalid_argument("tv_dual_fail_state: minimum value must be 0");
    }
    std::vector<WeightedValue> terms(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) terms[s] = {probs[s], v[s]};
    return maximize_over_breakpoints(std::move(terms), rho, 0.0, cap);
}

std::vector<double> greedy_transport(std::span<const double> values, std::span<const double> probs,
                                     double rho) {
    check_rho(rho);
    check_probs(probs, values.size());
    std::vector<double> out(probs.begin(), probs.end());
    const auto receiver = static_cast<std::size_t>(
        std::distance(values.begin(), std::min_element(values.begin(), values.end())));
    double budget = std::min(rho, std::max(0.0, 1.0 - out[receiver]));
    out[receiver] += budget;

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
    for (std::size_t j : order) {
        if (budget <= 0.0) break;
        if (j == receiver) continue;
        const double moved = std::min(budget, out[j]);
        out[j] -= moved;
        budget -= moved;
    }
    return out;
}

double brute_force_tv_infimum(std::span<const double> values, std::span<const double> probs,
                              double rho, double cap) {
    const auto v = checked_values(values, cap);
    const auto mu = greedy_transport(v, probs, rho);
    double total = 0.0;
    for (std::size_t s = 0; s < v.size(); ++s) total += mu[s] * v[s];
    return total;
}

}  // namespace drlsvi::tv
