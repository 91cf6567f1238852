#include "asvmc/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace asvmc {

namespace {

constexpr double kRadicandDust = 1e-13;  // |radicand| below this counts as 0
constexpr double kPoleGuard = 1e-9;      // kept away from the jump pole -alpha
constexpr double kInf = std::numeric_limits<double>::infinity();

// Radicand of gamma: (lambda/zeta - rho u)^2 + 1/4 - (u - 1/2)^2.  The
// grouping keeps the second term exactly zero at u = 0 and u = 1.
double gamma_radicand(const HestonParams& p, double u) {
    const double a = p.lambda / p.zeta - p.rho * u;
    return a * a + (0.25 - (u - 0.5) * (u - 0.5));
}

double radicand_slope(const HestonParams& p, double u) {
    const double a = p.lambda / p.zeta - p.rho * u;
    return -2.0 * p.rho * a - 2.0 * u + 1.0;
}

}  // namespace

void HestonParams::validate() const {
    if (!(lambda > 0.0)) throw InvalidParameterError("lambda must be positive");
    if (!(mu > 0.0)) throw InvalidParameterError("mu must be positive");
    if (!(zeta > 0.0)) throw InvalidParameterError("zeta must be positive");
    if (!(v0 > 0.0)) throw InvalidParameterError("v0 must be positive");
    if (!(s0 > 0.0)) throw InvalidParameterError("s0 must be positive");
    if (!(std::fabs(rho) < 1.0))
        throw InvalidParameterError("|rho| must be strictly below 1");
    // chi(0) = -lambda < 0 holds automatically; chi(1) < 0 is the remaining
    // admissibility condition.
    if (!(chi(*this, 1.0) < 0.0))
        throw InvalidParameterError("admissibility requires zeta*rho < lambda");
}

void JumpParams::validate() const {
    if (!(r > 0.0)) throw InvalidParameterError("jump rate r must be positive");
    if (!(alpha > 0.0)) throw InvalidParameterError("jump alpha must be positive");
}

void ModelSpec::validate() const {
    heston.validate();
    if (jumps) jumps->validate();
}

double chi(const HestonParams& p, double u) {
    return p.zeta * p.rho * u - p.lambda;
}

double jump_cumulant(const JumpParams& j, double u) {
    if (!(u > -j.alpha + kPoleGuard))
        throw OutsideDomainError("jump cumulant pole at u = " +
                                 std::to_string(-j.alpha));
    return j.r * u * (u - 1.0) / ((j.alpha + 1.0) * (j.alpha + u));
}

double jump_cumulant_prime(const JumpParams& j, double u) {
    if (!(u > -j.alpha + kPoleGuard))
        throw OutsideDomainError("jump cumulant pole at u = " +
                                 std::to_string(-j.alpha));
    const double d = j.alpha + u;
    return j.r / (j.alpha + 1.0) * (u * u + 2.0 * j.alpha * u - j.alpha) / (d * d);
}

double riccati_f(const ModelSpec& m, double u, double w) {
    double f = m.heston.lambda * m.heston.mu * w;
    if (m.jumps) f += jump_cumulant(*m.jumps, u);
    return f;
}

double riccati_r(const ModelSpec& m, double u, double w) {
    const HestonParams& p = m.heston;
    return 0.5 * p.zeta * p.zeta * w * w + chi(p, u) * w + 0.5 * (u * u - u);
}

double riccati_gamma(const HestonParams& p, double u) {
    const double rad = gamma_radicand(p, u);
    if (std::fabs(rad) < kRadicandDust) return 0.0;
    if (rad < 0.0)
        throw OutsideDomainError("u = " + std::to_string(u) +
                                 " lies outside the cumulant domain J");
    return p.zeta * std::sqrt(rad);
}

DomainJ domain_j(const ModelSpec& m) {
    const HestonParams& p = m.heston;
    p.validate();

    const double k = p.lambda / p.zeta;
    const double a = 1.0 - p.rho * p.rho;
    const double b = 0.5 - k * p.rho;
    const double disc = b * b + k * k * a;
    double roots[2] = {(b - std::sqrt(disc)) / a, (b + std::sqrt(disc)) / a};

    // Newton-polish each root in extended precision so that the double
    // nearest the true root is returned and the dust clamp sees it as an
    // exact zero of the radicand.
    for (double& u : roots) {
        long double x = u;
        for (int it = 0; it < 4; ++it) {
            const long double aa = (long double)p.lambda / p.zeta - (long double)p.rho * x;
            const long double q = aa * aa + 0.25L - (x - 0.5L) * (x - 0.5L);
            const long double qp = -2.0L * p.rho * aa - 2.0L * x + 1.0L;
            x -= q / qp;
        }
        u = static_cast<double>(x);
    }

    DomainJ dom;
    dom.u_minus = roots[0];
    dom.u_plus = roots[1];
    if (m.jumps && dom.u_minus <= -m.jumps->alpha + kPoleGuard) {
        dom.u_minus = -m.jumps->alpha + kPoleGuard;
        dom.clipped_at_pole = true;
    }
    return dom;
}

double stable_equilibrium(const ModelSpec& m, double u) {
    const HestonParams& p = m.heston;
    const double mm = p.lambda - p.zeta * p.rho * u;
    return (mm - riccati_gamma(p, u)) / (p.zeta * p.zeta);
}

double unstable_equilibrium(const ModelSpec& m, double u) {
    const HestonParams& p = m.heston;
    const double mm = p.lambda - p.zeta * p.rho * u;
    return (mm + riccati_gamma(p, u)) / (p.zeta * p.zeta);
}

namespace {

// Shared state for psi/phi: everything needed by both closed forms.
struct RiccatiParts {
    double gamma = 0.0;
    double mm = 0.0;        // lambda - zeta*rho*u
    double eta = 0.0;       // (mm - zeta^2 w) / gamma, gamma > 0 only
    double ratio = 0.0;     // (tanh + eta) / (1 + eta tanh), stabilized
    double logterm = 0.0;   // log(cosh + eta sinh), stabilized
};

RiccatiParts riccati_parts(const ModelSpec& m, double t, double u, double w) {
    const HestonParams& p = m.heston;
    RiccatiParts parts;
    parts.gamma = riccati_gamma(p, u);
    parts.mm = p.lambda - p.zeta * p.rho * u;
    if (parts.gamma == 0.0) return parts;  // handled by the double-root branch

    const double z2 = p.zeta * p.zeta;
    parts.eta = (parts.mm - z2 * w) / parts.gamma;
    if (parts.eta < -1.0) {
        const double t_star =
            std::log((parts.eta - 1.0) / (parts.eta + 1.0)) / parts.gamma;
        if (t >= t_star)
            throw BlowUpError("riccati flow blows up at t = " +
                                  std::to_string(t_star) +
                                  " (initial value above the unstable root)",
                              t_star);
    }

    const double x = 0.5 * parts.gamma * t;
    if (x > 18.0) {
        // log(cosh x + eta sinh x) = x + log((1+eta)/2 + (1-eta) e^{-2x}/2)
        // and the same decomposition for the tanh ratio; both stay finite for
        // arbitrarily large x and recover eta = -1 exactly.
        const double u2 = std::exp(-2.0 * x);
        const double aa = 1.0 + parts.eta;
        const double bb = (1.0 - parts.eta) * u2;
        parts.ratio = (aa - bb) / (aa + bb);
        parts.logterm = x + std::log(0.5 * aa + 0.5 * bb);
    } else {
        const double th = std::tanh(x);
        parts.ratio = (th + parts.eta) / (1.0 + parts.eta * th);
        parts.logterm = std::log(std::cosh(x) + parts.eta * std::sinh(x));
    }
    return parts;
}

}  // namespace

double riccati_psi(const ModelSpec& m, double t, double u, double w) {
    if (t == 0.0) return w;
    const HestonParams& p = m.heston;
    const double z2 = p.zeta * p.zeta;
    const RiccatiParts parts = riccati_parts(m, t, u, w);

    if (parts.gamma == 0.0) {
        // Double root w* = mm/zeta^2: psi' = (zeta^2/2)(psi - w*)^2.
        const double w_star = parts.mm / z2;
        const double y0 = w - w_star;
        if (y0 > 0.0) {
            const double t_star = 2.0 / (z2 * y0);
            if (t >= t_star)
                throw BlowUpError("riccati flow blows up at t = " +
                                      std::to_string(t_star), t_star);
        }
        return w_star + y0 / (1.0 - 0.5 * z2 * y0 * t);
    }
    return (parts.mm - parts.gamma * parts.ratio) / z2;
}

double riccati_phi(const ModelSpec& m, double t, double u, double w) {
    if (t == 0.0) return 0.0;
    const HestonParams& p = m.heston;
    const double z2 = p.zeta * p.zeta;
    const RiccatiParts parts = riccati_parts(m, t, u, w);

    double integral;  // of psi over [0, t]
    if (parts.gamma == 0.0) {
        const double w_star = parts.mm / z2;
        const double y0 = w - w_star;
        if (y0 > 0.0) {
            const double t_star = 2.0 / (z2 * y0);
            if (t >= t_star)
                throw BlowUpError("riccati flow blows up at t = " +
                                      std::to_string(t_star), t_star);
        }
        integral = w_star * t - (2.0 / z2) * std::log1p(-0.5 * z2 * y0 * t);
    } else {
        integral = (parts.mm * t - 2.0 * parts.logterm) / z2;
    }

    double phi = p.lambda * p.mu * integral;
    if (m.jumps) phi += t * jump_cumulant(*m.jumps, u);
    return phi;
}

double limiting_cumulant(const ModelSpec& m, double u) {
    return riccati_f(m, u, stable_equilibrium(m, u));
}

double limiting_cumulant_prime(const ModelSpec& m, double u) {
    const HestonParams& p = m.heston;
    const double g = riccati_gamma(p, u);
    if (g == 0.0) {
        // Endpoint of J: h is steep, the one-sided derivative diverges.
        return radicand_slope(p, u) > 0.0 ? -kInf : kInf;
    }
    const double z2 = p.zeta * p.zeta;
    const double gamma_prime = z2 * radicand_slope(p, u) / (2.0 * g);
    double hp = -p.lambda * p.mu * p.rho / p.zeta -
                p.lambda * p.mu / z2 * gamma_prime;
    if (m.jumps) hp += jump_cumulant_prime(*m.jumps, u);
    return hp;
}

}  // namespace asvmc
