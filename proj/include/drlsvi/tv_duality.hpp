#pragma once

#include <span>
#include <vector>

/// Worst-case expectations over total-variation balls.
///
/// The worst case inf_{TV(mu, mu0) <= rho} E_mu[V] is computed through its
/// one-dimensional dual: a maximization over a truncation level alpha of a
/// piecewise-linear concave-or-not function. All maximizations here are
/// exact: the objective is linear between the values of V, so it suffices to
/// evaluate it at those breakpoints and the interval endpoints.
namespace drlsvi::tv {

/// Values slightly outside [0, cap] by at most this much are clamped.
inline constexpr double kRangeSlack = 1e-9;

/// One term c * min(v, alpha) of a truncated linear functional.
struct WeightedValue {
    double coefficient;
    double value;
};

struct WeightedValueList {
    double cap = 0.0;
    std::vector<WeightedValue> terms;

    /// sum_t c_t * min(v_t, alpha)
    double evaluate(double alpha) const;
};

struct DualSolution {
    double value;
    double alpha;
};

/// max over alpha in [0, cap] of sum_t c_t min(v_t, alpha) - rho * alpha.
///
/// Ties are broken toward the smallest alpha, except that when the list is
/// nonempty and alpha = cap attains the maximum (the untruncated tail is
/// optimal) the reported maximizer is cap.
DualSolution ridge_dual_sweep(std::span<const WeightedValue> terms, double rho, double cap);

inline DualSolution ridge_dual_sweep(const WeightedValueList& list, double rho) {
    return ridge_dual_sweep(list.terms, rho, list.cap);
}

/// inf over the TV ball of radius rho around probs of E[values].
///
/// The inner minimum of the dual ranges over every state in `values`, not
/// only the support of `probs`. Throws on values outside [0, cap] (beyond the
/// slack) or an invalid probability vector.
double tv_worst_case_expectation(std::span<const double> values, std::span<const double> probs,
                                 double rho, double cap);

/// Fail-state form max_{alpha in [0,cap]} E[min(V, alpha)] - rho * alpha.
/// Requires min(values) == 0 up to the slack.
DualSolution tv_dual_fail_state(std::span<const double> values, std::span<const double> probs,
                                double rho, double cap);

/// Primal greedy transport: move mass min(rho, 1 - p[argmin]) from the
/// highest-valued states onto the lowest-valued state and return the
/// resulting expectation. Independent of the dual; used as a test oracle.
double brute_force_tv_infimum(std::span<const double> values, std::span<const double> probs,
                              double rho, double cap);

/// Worst-case distribution produced by the same greedy transport.
std::vector<double> greedy_transport(std::span<const double> values, std::span<const double> probs,
                                     double rho);

}  // namespace drlsvi::tv
