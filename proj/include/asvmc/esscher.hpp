#pragma once

#include <span>

#include "asvmc/rate.hpp"

namespace asvmc {

enum class PayoffKind { EuropeanPut, AsianPut };

// Put payoffs with uniform monitoring dates t_j = j T / n (n = 1 for the
// European case, where the single date is the maturity).
struct PayoffSpec {
    PayoffKind kind = PayoffKind::EuropeanPut;
    double strike = 1.0;
    double maturity = 1.0;
    int n_monitor = 1;

    static PayoffSpec european_put(double strike, double maturity);
    static PayoffSpec asian_put(double strike, double maturity, int n_monitor);

    void validate() const;
    Partition partition() const;
};

// Concave conjugate of the log payoff of a put on the discrete average,
//   H_hat(theta) = log(K / (1 - sum theta_l))
//                  - sum_m theta_m log(-theta_m n K / (S0 (1 - sum theta_l))).
// Requires every theta_m < 0 and sum theta_l < 1; otherwise InfeasibleError.
double payoff_conjugate(std::span<const double> weights, double strike,
                        double s0, int n);

// Variance proxy minimized over the tilt: H_hat + long-run cumulant term.
// european_objective throws InfeasibleError outside (u_minus, 0);
// asian_objective returns +infinity for infeasible tail sums.
double european_objective(const ModelSpec& m, const PayoffSpec& p, double theta);
double asian_objective(const ModelSpec& m, const PayoffSpec& p,
                       std::span<const double> theta_cum);

struct OptimalMeasure {
    SignedDiscreteMeasure measure;
    double objective_value = 0.0;
    int iterations = 0;
    double residual = 0.0;           // stationarity residual at the solution
    bool near_domain_boundary = false;  // |Theta_1| within 1% of |u_minus|
};

// Tilt minimizing the variance proxy.  European: bisection on the objective
// derivative over (u_minus, 0).  Asian: outer bisection on Theta_n with the
// remaining tail sums filled in by the backward stationarity recursion.
OptimalMeasure optimal_tilt_european(const ModelSpec& m, const PayoffSpec& p);
OptimalMeasure optimal_tilt_asian(const ModelSpec& m, const PayoffSpec& p);

// Dispatch on payoff kind.
OptimalMeasure optimal_tilt(const ModelSpec& m, const PayoffSpec& p);

}  // namespace asvmc
