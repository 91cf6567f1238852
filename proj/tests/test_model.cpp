#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "asvmc/model.hpp"
#include "oracles.hpp"

using namespace asvmc;
using test::heston_bench;
using test::jump_bench;

namespace {

std::vector<double> interior_grid(const ModelSpec& m, int n, double margin_frac = 0.02) {
    const DomainJ dom = domain_j(m);
    const double margin = margin_frac * dom.width();
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = dom.u_minus + margin +
               (dom.width() - 2 * margin) * i / double(n - 1);
    return g;
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(heston_bench().validate());
    CHECK_NOTHROW(jump_bench().validate());

    ModelSpec m = heston_bench();
    m.heston.rho = -1.0;
    CHECK_THROWS_AS(m.validate(), InvalidParameterError);
    m.heston.rho = 1.0;
    CHECK_THROWS_AS(m.validate(), InvalidParameterError);

    m = heston_bench();
    m.heston.zeta = -0.1;
    CHECK_THROWS_AS(m.validate(), InvalidParameterError);

    // chi(1) < 0 fails for zeta*rho >= lambda.
    m = heston_bench();
    m.heston.rho = 0.9;
    m.heston.zeta = 2.0;
    CHECK_THROWS_AS(m.validate(), InvalidParameterError);

    m = jump_bench();
    m.jumps->alpha = 0.0;
    CHECK_THROWS_AS(m.validate(), InvalidParameterError);
}

TEST_CASE("chi and riccati right-hand sides") {
    const ModelSpec m = heston_bench();
    CHECK(chi(m.heston, 0.0) == -1.15);
    CHECK(chi(m.heston, 1.0) == doctest::Approx(0.2 * -0.4 - 1.15).epsilon(1e-15));

    // Hand value: R(-0.5, 0.1) = 0.5*0.04*0.01 + (-1.11)*0.1 + 0.375 = 0.2642.
    CHECK(riccati_r(m, -0.5, 0.1) == doctest::Approx(0.2642).epsilon(1e-12));
    CHECK(riccati_r(m, 0.0, 0.0) == 0.0);
    CHECK(riccati_r(m, 1.0, 0.0) == 0.0);

    CHECK(riccati_f(m, 0.3, 0.25) == doctest::Approx(1.15 * 0.04 * 0.25).epsilon(1e-15));
}

TEST_CASE("jump cumulant values and pole guard") {
    const JumpParams j{2.0, 3.0};
    CHECK(jump_cumulant(j, 0.0) == 0.0);
    CHECK(jump_cumulant(j, 1.0) == 0.0);
    // r=2, alpha=3, u=-1: 2*(-1)(-2) / (4*2) = 0.5.
    CHECK(jump_cumulant(j, -1.0) == doctest::Approx(0.5).epsilon(1e-15));
    // u=2: 2*2*1 / (4*5) = 0.2.
    CHECK(jump_cumulant(j, 2.0) == doctest::Approx(0.2).epsilon(1e-15));

    CHECK_THROWS_AS(jump_cumulant(j, -3.0), OutsideDomainError);
    CHECK_THROWS_AS(jump_cumulant(j, -3.5), OutsideDomainError);
    CHECK_NOTHROW(jump_cumulant(j, -3.0 + 2e-9));

    // Finite-difference check of the derivative.
    for (double u : {-2.0, -0.5, 0.3, 1.7, 4.0}) {
        const double d = 1e-6;
        const double fd = (jump_cumulant(j, u + d) - jump_cumulant(j, u - d)) / (2 * d);
        CHECK(jump_cumulant_prime(j, u) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("gamma closed form") {
    const ModelSpec m = heston_bench();
    const HestonParams& p = m.heston;

    // gamma(0) = lambda, gamma(1) = lambda - zeta*rho by algebraic cancellation.
    CHECK(riccati_gamma(p, 0.0) == doctest::Approx(1.15).epsilon(1e-12));
    CHECK(riccati_gamma(p, 1.0) == doctest::Approx(1.15 + 0.2 * 0.4).epsilon(1e-12));

    // Frozen hand value: radicand(0.5) = 5.95^2 + 0.25 = 35.6525.
    CHECK(riccati_gamma(p, 0.5) ==
          doctest::Approx(0.2 * std::sqrt(35.6525)).epsilon(1e-14));

    CHECK_THROWS_AS(riccati_gamma(p, 12.0), OutsideDomainError);
    CHECK_THROWS_AS(riccati_gamma(p, -5.0), OutsideDomainError);
}

TEST_CASE("domain endpoints") {
    const ModelSpec m = heston_bench();
    const DomainJ dom = domain_j(m);

    // Frozen from the quadratic formula: b = 2.8, a = 0.84, disc = 35.6125.
    CHECK(dom.u_minus == doctest::Approx(-3.770977).epsilon(1e-5));
    CHECK(dom.u_plus == doctest::Approx(10.437644).epsilon(1e-5));
    CHECK_FALSE(dom.clipped_at_pole);
    CHECK(dom.contains(0.0));
    CHECK(dom.contains(1.0));

    // The polished endpoints land exactly on the dust clamp.
    CHECK(riccati_gamma(m.heston, dom.u_minus) == 0.0);
    CHECK(riccati_gamma(m.heston, dom.u_plus) == 0.0);

    // rho = 0: endpoints are 1/2 -/+ sqrt(1/4 + lambda^2/zeta^2).
    ModelSpec m0 = heston_bench();
    m0.heston.rho = 0.0;
    const DomainJ d0 = domain_j(m0);
    const double s = std::sqrt(0.25 + 5.75 * 5.75);
    CHECK(d0.u_minus == doctest::Approx(0.5 - s).epsilon(1e-12));
    CHECK(d0.u_plus == doctest::Approx(0.5 + s).epsilon(1e-12));

    // Jump set: raw left root ~ -2.1429 lies above the pole -3, so no clip.
    const DomainJ dj = domain_j(jump_bench());
    CHECK(dj.u_minus == doctest::Approx(-2.142929).epsilon(1e-5));
    CHECK(dj.u_plus == doctest::Approx(8.365151).epsilon(1e-5));
    CHECK_FALSE(dj.clipped_at_pole);

    // A heavier tail moves the pole inside the raw interval and clips it.
    ModelSpec mclip = jump_bench();
    mclip.jumps->alpha = 1.5;
    const DomainJ dc = domain_j(mclip);
    CHECK(dc.clipped_at_pole);
    CHECK(dc.u_minus == doctest::Approx(-1.5 + 1e-9).epsilon(1e-12));

    ModelSpec bad = heston_bench();
    bad.heston.rho = 1.0;
    CHECK_THROWS_AS(domain_j(bad), InvalidParameterError);
}

TEST_CASE("equilibria solve R = 0") {
    for (const ModelSpec& m : {heston_bench(), jump_bench()}) {
        for (double u : interior_grid(m, 17)) {
            const double ws = stable_equilibrium(m, u);
            const double wu = unstable_equilibrium(m, u);
            CHECK(std::fabs(riccati_r(m, u, ws)) < 1e-10);
            CHECK(std::fabs(riccati_r(m, u, wu)) < 1e-10);
            CHECK(ws <= wu);
        }
    }

    // Quadratic-formula oracle at u = 0.5 for the diffusion benchmark.
    const ModelSpec m = heston_bench();
    const double u = 0.5;
    const double c = chi(m.heston, u);
    const double z2 = m.heston.zeta * m.heston.zeta;
    const double w_oracle = (-c - std::sqrt(c * c - z2 * (u * u - u))) / z2;
    CHECK(stable_equilibrium(m, u) == doctest::Approx(w_oracle).epsilon(1e-12));
    CHECK(std::fabs(riccati_r(m, u, stable_equilibrium(m, u))) < 1e-12);

    CHECK(std::fabs(stable_equilibrium(m, 0.0)) < 1e-12);
    CHECK(std::fabs(stable_equilibrium(m, 1.0)) < 1e-12);
}

TEST_CASE("riccati flow: initial condition is exact") {
    const ModelSpec m = heston_bench();
    for (double u : {-2.0, 0.0, 0.3, 1.0, 5.0}) {
        for (double w : {-0.5, 0.0, 0.2}) {
            CHECK(riccati_psi(m, 0.0, u, w) == w);
            CHECK(riccati_phi(m, 0.0, u, w) == 0.0);
        }
    }
}

TEST_CASE("riccati flow matches RK4 oracle") {
    for (const ModelSpec& m : {heston_bench(), jump_bench()}) {
        for (double u : {-1.5, -0.457, 0.0, 0.3, 0.5, 1.0, 2.0}) {
            for (double t : {0.1, 1.0, 2.0}) {
                const auto [phi_o, psi_o] = test::rk4_riccati(m, t, u, 0.0);
                CHECK(riccati_psi(m, t, u, 0.0) == doctest::Approx(psi_o).epsilon(1e-8));
                CHECK(riccati_phi(m, t, u, 0.0) == doctest::Approx(phi_o).epsilon(1e-8));
            }
        }
        // Nonzero start inside the basin.
        const auto [phi_o, psi_o] = test::rk4_riccati(m, 1.5, 0.4, 0.1);
        CHECK(riccati_psi(m, 1.5, 0.4, 0.1) == doctest::Approx(psi_o).epsilon(1e-8));
        CHECK(riccati_phi(m, 1.5, 0.4, 0.1) == doctest::Approx(phi_o).epsilon(1e-8));
    }
}

TEST_CASE("psi converges to the stable equilibrium") {
    const ModelSpec m = heston_bench();
    const double u = 0.3;
    CHECK(riccati_psi(m, 50.0, u, 0.0) ==
          doctest::Approx(stable_equilibrium(m, u)).epsilon(1e-10));
    const auto [phi_o, psi_o] = test::rk4_riccati(m, 50.0, u, 0.0, 2e-3);
    CHECK(riccati_psi(m, 50.0, u, 0.0) == doctest::Approx(psi_o).epsilon(1e-8));
    (void)phi_o;
}

TEST_CASE("semiflow property") {
    for (const ModelSpec& m : {heston_bench(), jump_bench()}) {
        for (double u : interior_grid(m, 8)) {
            for (double t : {0.0, 0.7, 2.1}) {
                for (double s : {0.0, 0.4, 1.9}) {
                    const double psi_s = riccati_psi(m, s, u, 0.0);
                    const double lhs_psi = riccati_psi(m, t + s, u, 0.0);
                    const double rhs_psi = riccati_psi(m, t, u, psi_s);
                    CHECK(lhs_psi == doctest::Approx(rhs_psi).epsilon(1e-11));

                    const double lhs_phi = riccati_phi(m, t + s, u, 0.0);
                    const double rhs_phi =
                        riccati_phi(m, t, u, psi_s) + riccati_phi(m, s, u, 0.0);
                    CHECK(std::fabs(lhs_phi - rhs_phi) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("blow-up above the unstable root") {
    const ModelSpec m = heston_bench();
    const double u = 0.5;
    const double wu = unstable_equilibrium(m, u);

    // Exactly at the unstable root the flow is constant.
    CHECK(riccati_psi(m, 3.0, u, wu) == doctest::Approx(wu).epsilon(1e-9));

    // Above it the flow explodes at a finite, reported time.
    const double w = wu + 0.5;
    double t_star = 0.0;
    try {
        riccati_psi(m, 1e6, u, w);
        CHECK(false);
    } catch (const BlowUpError& e) {
        t_star = e.blow_up_time;
    }
    CHECK(t_star > 0.0);
    CHECK_NOTHROW(riccati_psi(m, 0.9 * t_star, u, w));
    CHECK(riccati_psi(m, 0.9 * t_star, u, w) > wu);
    CHECK_THROWS_AS(riccati_phi(m, 1.01 * t_star, u, w), BlowUpError);

    // RK4 cross-check just before blow-up.
    const auto [phi_o, psi_o] = test::rk4_riccati(m, 0.5 * t_star, u, w, 1e-4);
    CHECK(riccati_psi(m, 0.5 * t_star, u, w) == doctest::Approx(psi_o).epsilon(1e-6));
    (void)phi_o;
}

TEST_CASE("limiting cumulant vanishes at 0 and 1") {
    for (const ModelSpec& m : {heston_bench(), jump_bench()}) {
        CHECK(std::fabs(limiting_cumulant(m, 0.0)) <= 1e-12);
        CHECK(std::fabs(limiting_cumulant(m, 1.0)) <= 1e-12);
    }
}

TEST_CASE("limiting cumulant is convex and matches the scaling limit") {
    for (const ModelSpec& m : {heston_bench(), jump_bench()}) {
        const auto grid = interior_grid(m, 31);
        const double d = 1e-4;
        for (double u : grid) {
            const double second = limiting_cumulant(m, u - d) -
                                  2.0 * limiting_cumulant(m, u) +
                                  limiting_cumulant(m, u + d);
            CHECK(second >= -1e-8);
        }
    }

    // eps * phi(dt/eps, u, 0) / dt -> h(u).
    const ModelSpec m = heston_bench();
    for (double u : {-2.0, 0.5, 3.0}) {
        const double eps = 1e-3;
        const double approx = eps * riccati_phi(m, 1.0 / eps, u, 0.0);
        const double h = limiting_cumulant(m, u);
        CHECK(std::fabs(approx - h) < 0.01 * std::fabs(h) + 1e-6);
    }
}

TEST_CASE("limiting cumulant derivative") {
    // h'(0) = -mu/2 (long-run drift of X); with jumps the compensated jump
    // part contributes -r/(alpha(alpha+1)).
    const ModelSpec ma = heston_bench();
    CHECK(limiting_cumulant_prime(ma, 0.0) == doctest::Approx(-0.02).epsilon(1e-12));
    const ModelSpec mb = jump_bench();
    CHECK(limiting_cumulant_prime(mb, 0.0) ==
          doctest::Approx(-0.35 - 2.0 / 12.0).epsilon(1e-12));

    // Central differences on an interior grid.
    for (const ModelSpec& m : {heston_bench(), jump_bench()}) {
        for (double u : interior_grid(m, 21, 0.05)) {
            const double d = 1e-6;
            const double fd =
                (limiting_cumulant(m, u + d) - limiting_cumulant(m, u - d)) / (2 * d);
            CHECK(limiting_cumulant_prime(m, u) ==
                  doctest::Approx(fd).epsilon(1e-6));
        }
    }

    // rho = 0 makes gamma symmetric about 1/2, so h'(1/2) = 0.
    ModelSpec m0 = heston_bench();
    m0.heston.rho = 0.0;
    CHECK(std::fabs(limiting_cumulant_prime(m0, 0.5)) < 1e-13);

    // Steepness: the derivative diverges toward the endpoints and is an
    // infinite sentinel exactly there.
    const DomainJ dom = domain_j(ma);
    const double h3 = limiting_cumulant_prime(ma, dom.u_plus - 1e-3);
    const double h6 = limiting_cumulant_prime(ma, dom.u_plus - 1e-6);
    CHECK(h6 > h3);
    CHECK(h6 > 1e2);
    CHECK(limiting_cumulant_prime(ma, dom.u_plus) ==
          std::numeric_limits<double>::infinity());
    CHECK(limiting_cumulant_prime(ma, dom.u_minus) ==
          -std::numeric_limits<double>::infinity());
}
