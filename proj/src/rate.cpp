#include "asvmc/rate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace asvmc {

void Partition::validate() const {
    if (times.empty()) throw InfeasibleError("partition must be nonempty");
    double prev = 0.0;
    for (double t : times) {
        if (!(t > prev))
            throw InfeasibleError("partition times must be strictly increasing and positive");
        prev = t;
    }
}

SignedDiscreteMeasure::SignedDiscreteMeasure(Partition support,
                                             std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
    support_.validate();
    if (weights_.size() != support_.times.size())
        throw InfeasibleError("measure needs one weight per support date");
    cumulative_.resize(weights_.size());
    double tail = 0.0;
    for (int j = static_cast<int>(weights_.size()) - 1; j >= 0; --j) {
        tail += weights_[j];
        cumulative_[j] = tail;
    }
}

void DiscretePath::validate() const {
    partition.validate();
    if (values.size() != partition.times.size())
        throw InfeasibleError("path needs one value per partition date");
}

ExtendedReal measure_cumulant(const ModelSpec& m, const SignedDiscreteMeasure& theta) {
    const DomainJ dom = domain_j(m);
    double sum = 0.0;
    double t_prev = 0.0;
    for (int j = 0; j < theta.size(); ++j) {
        const double tail = theta.cumulative()[j];
        if (!dom.contains(tail)) return ExtendedReal::infinity();
        const double t_j = theta.support().times[j];
        sum += (t_j - t_prev) * limiting_cumulant(m, tail);
        t_prev = t_j;
    }
    return {sum, true};
}

double cumulant_integral(const ModelSpec& m, const SignedDiscreteMeasure& theta) {
    const ExtendedReal v = measure_cumulant(m, theta);
    if (!v.finite)
        throw InfeasibleError("a tail sum of the measure leaves the domain J");
    return v.value;
}

double legendre_transform(const ModelSpec& m, double y) {
    const DomainJ dom = domain_j(m);
    const double guard_lo = 1e-12 * std::max(1.0, std::fabs(dom.u_minus));
    const double guard_hi = 1e-12 * std::max(1.0, std::fabs(dom.u_plus));
    double lo = dom.u_minus + guard_lo;
    double hi = dom.u_plus - guard_hi;

    // h is steep, so h' sweeps (-inf, inf) over the interior; only a y beyond
    // the guarded range falls back to the endpoint values.
    if (!(limiting_cumulant_prime(m, lo) < y && y < limiting_cumulant_prime(m, hi))) {
        const double at_lo = dom.u_minus * y - limiting_cumulant(m, dom.u_minus);
        const double at_hi = dom.u_plus * y - limiting_cumulant(m, dom.u_plus);
        return std::max(at_lo, at_hi);
    }

    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (limiting_cumulant_prime(m, mid) < y ? lo : hi) = mid;
    }
    const double u = 0.5 * (lo + hi);
    return u * y - limiting_cumulant(m, u);
}

double rate_function(const ModelSpec& m, const DiscretePath& path) {
    path.validate();
    double sum = 0.0;
    double t_prev = 0.0, x_prev = 0.0;
    for (std::size_t j = 0; j < path.values.size(); ++j) {
        const double dt = path.partition.times[j] - t_prev;
        const double dx = path.values[j] - x_prev;
        sum += dt * legendre_transform(m, dx / dt);
        t_prev = path.partition.times[j];
        x_prev = path.values[j];
    }
    return sum;
}

ScalingReport scaling_limit_report(const ModelSpec& m,
                                   const std::vector<double>& u_grid,
                                   const std::vector<double>& eps_grid,
                                   double dt) {
    ScalingReport rep;
    for (double u : u_grid) {
        const double h = limiting_cumulant(m, u);
        const double w = stable_equilibrium(m, u);
        double prev_phi_err = 0.0, prev_psi_err = 0.0;
        bool first = true;
        for (double eps : eps_grid) {
            ScalingRow row;
            row.u = u;
            row.epsilon = eps;
            row.phi_error = std::fabs(eps * riccati_phi(m, dt / eps, u, 0.0) / dt - h);
            row.psi_error = std::fabs(riccati_psi(m, dt / eps, u, 0.0) - w);
            if (!first && (row.phi_error > prev_phi_err + 1e-15 ||
                           row.psi_error > prev_psi_err + 1e-15))
                rep.monotone = false;
            prev_phi_err = row.phi_error;
            prev_psi_err = row.psi_error;
            first = false;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

}  // namespace asvmc
