#pragma once

#include <optional>

#include "asvmc/errors.hpp"

namespace asvmc {

// Heston-type stochastic volatility with log price X and variance V:
//   dX_t = (delta - V_t/2) dt + sqrt(V_t) dW^1_t  (+ jumps),
//   dV_t = lambda (mu - V_t) dt + zeta sqrt(V_t) dW^2_t,
//   d<W^1, W^2>_t = rho dt.
struct HestonParams {
    double lambda = 0.0;  // mean-reversion speed of V
    double mu = 0.0;      // long-run variance level
    double zeta = 0.0;    // volatility of variance
    double rho = 0.0;     // Brownian correlation
    double v0 = 0.0;      // initial variance
    double s0 = 1.0;      // initial spot, X_0 = log s0 shifted to 0 internally

    void validate() const;
};

// Negative-exponential jumps in the log price: arrival rate r, sizes with
// density alpha * exp(alpha x) on x < 0.  The compensator drift
// delta = r / (alpha + 1) keeps exp(X) a martingale.
struct JumpParams {
    double r = 0.0;
    double alpha = 0.0;

    void validate() const;
    double compensator_drift() const { return r / (alpha + 1.0); }
};

struct ModelSpec {
    HestonParams heston;
    std::optional<JumpParams> jumps;

    void validate() const;
    bool has_jumps() const { return jumps.has_value(); }
    // Drift added to X so that exp(X) stays a martingale (0 without jumps).
    double martingale_drift() const {
        return jumps ? jumps->compensator_drift() : 0.0;
    }
};

// Interval J = [u_minus, u_plus] on which the limiting cumulant h is finite.
// With jumps the left end is clipped above the pole at -alpha.
struct DomainJ {
    double u_minus = 0.0;
    double u_plus = 0.0;
    bool clipped_at_pole = false;

    bool contains(double u) const { return u >= u_minus && u <= u_plus; }
    double width() const { return u_plus - u_minus; }
};

// chi(u) = zeta*rho*u - lambda, the linear-in-w coefficient of R.
double chi(const HestonParams& p, double u);

// Cumulant of the compensated jump part: r*u*(u-1) / ((alpha+1)(alpha+u)).
// Throws OutsideDomainError at and beyond the pole u <= -alpha.
double jump_cumulant(const JumpParams& j, double u);
double jump_cumulant_prime(const JumpParams& j, double u);

// Right-hand sides of the generalized Riccati system
//   d/dt phi = F(u, psi),   d/dt psi = R(u, psi).
double riccati_f(const ModelSpec& m, double u, double w);
double riccati_r(const ModelSpec& m, double u, double w);

// gamma(u) = sqrt((lambda - zeta*rho*u)^2 - zeta^2 (u^2 - u)), the decay rate
// of psi toward its equilibrium.  The radicand is clamped to zero within
// 1e-14 of the axis so that the computed endpoints of J evaluate to exactly
// gamma = 0; a radicand below the clamp throws OutsideDomainError.
double riccati_gamma(const HestonParams& p, double u);

DomainJ domain_j(const ModelSpec& m);

// Roots of R(u, .) = 0: the stable (smaller) one attracts psi(t, u, 0),
// the unstable one bounds the basin of attraction.
double stable_equilibrium(const ModelSpec& m, double u);
double unstable_equilibrium(const ModelSpec& m, double u);

// Closed-form solutions of the Riccati system started at psi(0) = w.
// Preconditions: u in J, w strictly below the unstable root (otherwise the
// flow blows up at a finite time reported via BlowUpError).
double riccati_psi(const ModelSpec& m, double t, double u, double w);
double riccati_phi(const ModelSpec& m, double t, double u, double w);

// Limiting cumulant h(u) = lim_t phi(t, u, 0)/t = F(u, w_stable(u)) and its
// derivative.  At the exact endpoints of J the derivative is +/- infinity
// (steepness); it is returned as such.
double limiting_cumulant(const ModelSpec& m, double u);
double limiting_cumulant_prime(const ModelSpec& m, double u);

}  // namespace asvmc
