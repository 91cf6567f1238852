#pragma once

// Test-only oracles: deliberately simple, independent routes to the same
// quantities the library computes in closed form.

#include <cmath>
#include <functional>
#include <utility>

#include "asvmc/model.hpp"

namespace asvmc::test {

// Benchmark parameter set used by the diffusion-only experiments.
inline ModelSpec heston_bench() {
    ModelSpec m;
    m.heston = {1.15, 0.04, 0.2, -0.4, 0.04, 1.0};
    return m;
}

// Benchmark parameter set used by the jump experiments.
inline ModelSpec jump_bench() {
    ModelSpec m;
    m.heston = {1.1, 0.7, 0.3, -0.5, 1.3, 1.0};
    m.jumps = JumpParams{2.0, 3.0};
    return m;
}

inline ModelSpec jump_bench_diffusion_only() {
    ModelSpec m = jump_bench();
    m.jumps.reset();
    return m;
}

// Fixed-step RK4 for the coupled system phi' = F(u, psi), psi' = R(u, psi),
// from (phi, psi)(0) = (0, w).  Returns (phi, psi) at time t.
inline std::pair<double, double> rk4_riccati(const ModelSpec& m, double t,
                                             double u, double w,
                                             double dt = 1e-3) {
    const long n = std::lround(std::ceil(t / dt));
    const double h = (n > 0) ? t / n : 0.0;
    double phi = 0.0, psi = w;
    for (long i = 0; i < n; ++i) {
        const double k1p = riccati_r(m, u, psi);
        const double k1f = riccati_f(m, u, psi);
        const double k2p = riccati_r(m, u, psi + 0.5 * h * k1p);
        const double k2f = riccati_f(m, u, psi + 0.5 * h * k1p);
        const double k3p = riccati_r(m, u, psi + 0.5 * h * k2p);
        const double k3f = riccati_f(m, u, psi + 0.5 * h * k2p);
        const double k4p = riccati_r(m, u, psi + h * k3p);
        const double k4f = riccati_f(m, u, psi + h * k3p);
        phi += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    return {phi, psi};
}

// Golden-section minimizer on [a, b] for a unimodal scalar function.
inline double golden_min(const std::function<double(double)>& f, double a,
                         double b, double tol = 1e-10) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Normal quantile by bisection on the erfc-based CDF; independent of the
// polynomial inverse used by the kernels.
inline double normal_quantile_oracle(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace asvmc::test
