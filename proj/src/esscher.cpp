#include "asvmc/esscher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace asvmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tilts are kept strictly inside J; the relative pullback leaves room for the
// steep growth of h' to dominate near the edge.
double bracket_floor(const DomainJ& dom) { return dom.u_minus * (1.0 - 1e-9); }

}  // namespace

PayoffSpec PayoffSpec::european_put(double strike, double maturity) {
    return {PayoffKind::EuropeanPut, strike, maturity, 1};
}

PayoffSpec PayoffSpec::asian_put(double strike, double maturity, int n_monitor) {
    return {PayoffKind::AsianPut, strike, maturity, n_monitor};
}

void PayoffSpec::validate() const {
    if (!(strike > 0.0) || !std::isfinite(strike))
        throw InvalidParameterError("strike must be positive and finite");
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw InvalidParameterError("maturity must be positive and finite");
    if (n_monitor < 1)
        throw InvalidParameterError("need at least one monitoring date");
    if (kind == PayoffKind::EuropeanPut && n_monitor != 1)
        throw InvalidParameterError("a European put has a single monitoring date");
}

Partition PayoffSpec::partition() const {
    validate();
    Partition part;
    part.times.resize(n_monitor);
    for (int j = 1; j <= n_monitor; ++j)
        part.times[j - 1] = maturity * j / n_monitor;
    part.times.back() = maturity;  // keep the final date exact
    return part;
}

double payoff_conjugate(std::span<const double> weights, double strike,
                        double s0, int n) {
    if (n != static_cast<int>(weights.size()))
        throw InvalidParameterError("n must match the number of weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w < 0.0))
            throw InfeasibleError("every tilt weight must be negative");
        total += w;
    }
    const double log_common = std::log(n * strike / (s0 * (1.0 - total)));
    double sum = 0.0;
    for (double w : weights) sum += w * (std::log(-w) + log_common);
    return std::log(strike / (1.0 - total)) - sum;
}

double european_objective(const ModelSpec& m, const PayoffSpec& p, double theta) {
    p.validate();
    const DomainJ dom = domain_j(m);
    if (!(dom.u_minus < theta && theta < 0.0))
        throw InfeasibleError("tilt must lie in (u_minus, 0)");
    const double w[1] = {theta};
    return payoff_conjugate(w, p.strike, m.heston.s0, 1) +
           p.maturity * limiting_cumulant(m, theta);
}

double asian_objective(const ModelSpec& m, const PayoffSpec& p,
                       std::span<const double> theta_cum) {
    p.validate();
    const int n = p.n_monitor;
    if (n != static_cast<int>(theta_cum.size()))
        throw InvalidParameterError("need one tail sum per monitoring date");
    const DomainJ dom = domain_j(m);
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) {
        if (!dom.contains(theta_cum[j])) return kInf;
        const double next = (j + 1 < n) ? theta_cum[j + 1] : 0.0;
        w[j] = theta_cum[j] - next;
        if (!(w[j] < 0.0)) return kInf;
    }
    double sum_h = 0.0;
    for (int j = 0; j < n; ++j) sum_h += limiting_cumulant(m, theta_cum[j]);
    return payoff_conjugate(w, p.strike, m.heston.s0, n) +
           (p.maturity / n) * sum_h;
}

OptimalMeasure optimal_tilt_european(const ModelSpec& m, const PayoffSpec& p) {
    p.validate();
    const DomainJ dom = domain_j(m);
    const double k_over_s0 = p.strike / m.heston.s0;
    // Derivative of the variance proxy; strictly increasing on (u_minus, 0).
    auto deriv = [&](double th) {
        return -std::log(-th * k_over_s0 / (1.0 - th)) +
               p.maturity * limiting_cumulant_prime(m, th);
    };
    double lo = bracket_floor(dom);
    double hi = -1e-12;
    if (!(deriv(hi) > 0.0))
        throw SolverError("variance proxy is not increasing near zero tilt");
    if (!(deriv(lo) < 0.0))
        throw SolverError("variance proxy derivative does not change sign over (u_minus, 0)");
    int iters = 0;
    for (; iters < 200; ++iters) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (deriv(mid) < 0.0 ? lo : hi) = mid;
        if (hi - lo < 1e-15 * std::max(1.0, -lo)) break;
    }
    const double theta = 0.5 * (lo + hi);
    const double res = std::fabs(deriv(theta));
    if (!(res < 1e-10))
        throw SolverError("stationarity residual did not converge");
    return {SignedDiscreteMeasure({{p.maturity}}, {theta}),
            european_objective(m, p, theta), iters, res,
            std::fabs(theta) >= 0.99 * std::fabs(bracket_floor(dom))};
}

namespace {

// Tail sums Theta_1..Theta_n reconstructed from the last one via the interior
// stationarity conditions; marked infeasible as soon as one leaves the
// guarded domain or the arithmetic degenerates.
struct Chain {
    std::vector<double> tails;
    bool feasible = false;
};

Chain backward_chain(const ModelSpec& m, const PayoffSpec& p, double theta_n,
                     double floor_tilt) {
    const int n = p.n_monitor;
    const double dt = p.maturity / n;
    Chain c;
    c.tails.assign(n, 0.0);
    if (!(theta_n > floor_tilt) || !(theta_n < 0.0)) return c;
    c.tails[n - 1] = theta_n;
    if (n >= 2) {
        c.tails[n - 2] =
            theta_n + theta_n * std::exp(-dt * limiting_cumulant_prime(m, theta_n));
        if (!(c.tails[n - 2] > floor_tilt)) return c;
        for (int j = n - 2; j >= 1; --j) {
            const double incr = (c.tails[j + 1] - c.tails[j]) *
                                std::exp(-dt * limiting_cumulant_prime(m, c.tails[j]));
            c.tails[j - 1] = c.tails[j] - incr;
            if (!(c.tails[j - 1] > floor_tilt)) return c;
        }
    }
    c.feasible = true;
    return c;
}

// Residual of the remaining (first-date) stationarity condition, in the form
//   (1 - Theta_1) e^{dt h'(Theta_1)} S0 / (n K) - (Theta_2 - Theta_1),
// positive when Theta_n is too close to zero and negative past the root.
double chain_residual(const ModelSpec& m, const PayoffSpec& p, const Chain& c) {
    const int n = p.n_monitor;
    const double dt = p.maturity / n;
    const double th1 = c.tails[0];
    const double th2 = (n >= 2) ? c.tails[1] : 0.0;
    return (1.0 - th1) * std::exp(dt * limiting_cumulant_prime(m, th1)) *
               m.heston.s0 / (n * p.strike) -
           (th2 - th1);
}

}  // namespace

OptimalMeasure optimal_tilt_asian(const ModelSpec& m, const PayoffSpec& p) {
    p.validate();
    const int n = p.n_monitor;
    const double dt = p.maturity / n;
    const DomainJ dom = domain_j(m);
    const double floor_tilt = bracket_floor(dom);

    double lo = floor_tilt;
    double hi = -1e-12;
    {
        const Chain c = backward_chain(m, p, hi, floor_tilt);
        if (!c.feasible || !(chain_residual(m, p, c) > 0.0))
            throw SolverError("stationarity residual has the wrong sign near zero tilt");
        const Chain cl = backward_chain(m, p, lo, floor_tilt);
        if (cl.feasible && !(chain_residual(m, p, cl) < 0.0))
            throw SolverError("no sign change for the outer dichotomy");
    }
    int iters = 0;
    for (; iters < 200; ++iters) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const Chain c = backward_chain(m, p, mid, floor_tilt);
        const bool negative_side = !c.feasible || chain_residual(m, p, c) < 0.0;
        (negative_side ? lo : hi) = mid;
    }
    // hi is only ever replaced by feasible iterates, so this chain exists.
    const Chain c = backward_chain(m, p, hi, floor_tilt);
    if (!c.feasible)
        throw SolverError("dichotomy terminated on an infeasible chain");

    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) {
        const double next = (j + 1 < n) ? c.tails[j + 1] : 0.0;
        w[j] = c.tails[j] - next;
    }
    // Residuals of the full stationarity system in log form.
    double res = std::fabs(std::log((1.0 - c.tails[0]) * m.heston.s0 / (n * p.strike)) +
                           dt * limiting_cumulant_prime(m, c.tails[0]) -
                           std::log(-w[0]));
    for (int j = 1; j < n; ++j)
        res = std::max(res, std::fabs(std::log(-w[j - 1]) - std::log(-w[j]) +
                                      dt * limiting_cumulant_prime(m, c.tails[j])));
    if (!(res < 1e-8))
        throw SolverError("stationarity residuals did not converge");

    return {SignedDiscreteMeasure(p.partition(), w),
            asian_objective(m, p, c.tails), iters, res,
            std::fabs(c.tails[0]) >= 0.99 * std::fabs(floor_tilt)};
}

OptimalMeasure optimal_tilt(const ModelSpec& m, const PayoffSpec& p) {
    return p.kind == PayoffKind::EuropeanPut ? optimal_tilt_european(m, p)
                                             : optimal_tilt_asian(m, p);
}

}  // namespace asvmc
