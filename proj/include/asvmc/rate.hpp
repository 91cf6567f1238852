#pragma once

#include <vector>

#include "asvmc/model.hpp"

namespace asvmc {

// Strictly increasing times 0 < t_1 < ... < t_n = T.
struct Partition {
    std::vector<double> times;

    void validate() const;
    int size() const { return static_cast<int>(times.size()); }
    double maturity() const { return times.back(); }
};

// Discrete signed measure theta = sum_j theta_j delta_{t_j}.  The tail sums
// Theta_j = sum_{k>=j} theta_k are what the model sees between dates.
class SignedDiscreteMeasure {
  public:
    SignedDiscreteMeasure(Partition support, std::vector<double> weights);

    const Partition& support() const { return support_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cumulative() const { return cumulative_; }
    int size() const { return support_.size(); }

  private:
    Partition support_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;  // cumulative_[j] = sum_{k>=j} weights_[k]
};

// Piecewise value attained at each partition date (x(t_j) = values[j]).
struct DiscretePath {
    Partition partition;
    std::vector<double> values;  // starts implicitly at x(0) = 0

    void validate() const;
};

// Value on the extended real line; +infinity encodes "outside the domain".
struct ExtendedReal {
    double value = 0.0;
    bool finite = true;

    static ExtendedReal infinity() { return {0.0, false}; }
    bool operator==(const ExtendedReal&) const = default;
};

// Long-run cumulant of the sampled tilt sum_j theta_j X_{t_j}:
//   Lambda_tau(theta) = sum_j (t_j - t_{j-1}) h(Theta_j),
// +infinity as soon as one tail sum leaves J.
ExtendedReal measure_cumulant(const ModelSpec& m, const SignedDiscreteMeasure& theta);

// Same quantity when finiteness is required (the epsilon -> 0 limit of the
// normalization exponent); throws InfeasibleError outside J.
double cumulant_integral(const ModelSpec& m, const SignedDiscreteMeasure& theta);

// Legendre transform h*(y) = sup_{u in J} { u y - h(u) }.  h is steep, so
// for every finite y the supremum is attained inside J (up to the endpoint
// guard) and found by bisection on h'.
double legendre_transform(const ModelSpec& m, double y);

// Rate function of the sampled path under the long-time scaling:
//   sum_j (t_j - t_{j-1}) h*((x_j - x_{j-1}) / (t_j - t_{j-1})).
double rate_function(const ModelSpec& m, const DiscretePath& path);

// Convergence report for epsilon * phi(dt/epsilon, u, 0) / dt -> h(u) and
// psi(dt/epsilon, u, 0) -> w_stable(u).
struct ScalingRow {
    double u = 0.0;
    double epsilon = 0.0;
    double phi_error = 0.0;  // |eps*phi(dt/eps,u,0)/dt - h(u)|
    double psi_error = 0.0;  // |psi(dt/eps,u,0) - w_stable(u)|
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    bool monotone = true;  // errors decrease as epsilon decreases, per u
};

ScalingReport scaling_limit_report(const ModelSpec& m,
                                   const std::vector<double>& u_grid,
                                   const std::vector<double>& eps_grid,
                                   double dt = 1.0);

}  // namespace asvmc
