// Shared kernel math, included with internal linkage into each engine
// translation unit.  Scalar and SIMD variants must round identically, so
// everything here sticks to IEEE add/sub/mul/div/sqrt plus exact integer bit
// manipulation; no libm calls whose accuracy could differ between lanes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "asvmc/errors.hpp"
#include "asvmc/simulate.hpp"
#include "engine.hpp"

namespace {

using asvmc::JumpEvent;
using asvmc::detail::EngineConfig;
using asvmc::detail::PathOut;

// ---- counter-based block generator: 4x32 state, 10 rounds ----

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

struct Block {
    std::uint32_t w[4];
};

// Counter layout: {draw index, 0, purpose, path index}; purpose 0 draws the
// diffusion increments, purpose 1 the jump stream.
inline Block philox_block(std::uint32_t k0, std::uint32_t k1, std::uint32_t c0,
                          std::uint32_t c1, std::uint32_t c2, std::uint32_t c3) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * c0;
        const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * c2;
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return {{c0, c1, c2, c3}};
}

// ---- uniforms ----

// 53-bit uniform in (0, 1).  The +0.5 centers the lattice away from 0; the
// clamp absorbs the round-to-even tie at the very top of the range, which
// would otherwise produce exactly 1.0 once in 2^53 draws.
constexpr double kUniformTop = 0x1.fffffffffffffp-1;

inline double words_to_uniform(std::uint32_t hi, std::uint32_t lo) {
    const double mant = static_cast<double>(hi >> 6) * 134217728.0 +
                        static_cast<double>(lo >> 5);
    const double u = (mant + 0.5) * 0x1p-53;
    return (u < kUniformTop) ? u : kUniformTop;
}

// Sequential uniform stream over one purpose channel of one path.
struct UniformStream {
    std::uint32_t k0 = 0, k1 = 0, purpose = 0, path = 0;
    std::uint32_t idx = 0;
    bool has_spare = false;
    double spare = 0.0;

    double next() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const Block b = philox_block(k0, k1, idx, 0u, purpose, path);
        ++idx;
        spare = words_to_uniform(b.w[2], b.w[3]);
        has_spare = true;
        return words_to_uniform(b.w[0], b.w[1]);
    }
};

// ---- elementary functions (domain: the ranges the engine feeds them) ----

constexpr double kSqrt2 = 0x1.6a09e667f3bcdp+0;
constexpr double kLn2Hi = 0x1.62e42fee00000p-1;
constexpr double kLn2Lo = 0x1.a39ef35793c76p-33;
constexpr double kInvLn2 = 0x1.71547652b82fep+0;
constexpr double kExpMagic = 6755399441055744.0;  // 1.5 * 2^52

constexpr double kLogC[11] = {
    1.0,        1.0 / 3.0,  1.0 / 5.0,  1.0 / 7.0,  1.0 / 9.0,  1.0 / 11.0,
    1.0 / 13.0, 1.0 / 15.0, 1.0 / 17.0, 1.0 / 19.0, 1.0 / 21.0,
};

constexpr double kExpC[14] = {
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
    1.0 / 6227020800.0,
};

// log for positive normal x: split off the exponent, fold the mantissa into
// [sqrt2/2, sqrt2), and sum the odd atanh series in (m-1)/(m+1).
inline double klog(double x) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    double e =
        static_cast<double>(static_cast<std::int64_t>(bits >> 52)) - 1023.0;
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) |
                                     0x3FF0000000000000ull);
    if (m > kSqrt2) {
        m = m * 0.5;
        e = e + 1.0;
    }
    const double t = (m - 1.0) / (m + 1.0);
    const double s = t * t;
    double p = kLogC[10];
    for (int i = 9; i >= 0; --i) p = p * s + kLogC[i];
    const double lm = (2.0 * t) * p;
    return e * kLn2Hi + (lm + e * kLn2Lo);
}

// exp for |x| <= ~700: round x/ln2 with the shift trick, evaluate the degree
// 13 Taylor polynomial on the reduced argument, scale by 2^k via exponent
// bits.
inline double kexp(double x) {
    const double kd = x * kInvLn2 + kExpMagic;
    const double k = kd - kExpMagic;
    const double r = (x - k * kLn2Hi) - k * kLn2Lo;
    double p = kExpC[13];
    for (int i = 12; i >= 0; --i) p = p * r + kExpC[i];
    const std::int32_t ki = static_cast<std::int32_t>(
        static_cast<std::uint32_t>(std::bit_cast<std::uint64_t>(kd) & 0xFFFFFFFFull));
    const double scale =
        std::bit_cast<double>(static_cast<std::uint64_t>(1023 + ki) << 52);
    return p * scale;
}

// Normal quantile (rational approximations on three ranges).
constexpr double kNormA[8] = {
    3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4,  2.5090809287301226727e3,
};
constexpr double kNormB[8] = {
    1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4,  5.2264952788528545610e3,
};
constexpr double kNormC[8] = {
    1.42343711074968357734e0, 4.63033784615654529590e0,
    5.76949722146069140550e0, 3.64784832476320460504e0,
    1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
};
constexpr double kNormD[8] = {
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
};
constexpr double kNormE[8] = {
    6.65790464350110377720e0, 5.46378491116411436990e0,
    1.78482653991729133580e0, 2.96560571828504891230e-1,
    2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
};
constexpr double kNormF[8] = {
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
};

inline double poly7(double r, const double* c) {
    double p = c[7];
    for (int i = 6; i >= 0; --i) p = p * r + c[i];
    return p;
}

inline double knorminv(double u) {
    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * (poly7(r, kNormA) / poly7(r, kNormB));
    }
    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-klog(r));
    double val;
    if (r <= 5.0) {
        const double s = r - 1.6;
        val = poly7(s, kNormC) / poly7(s, kNormD);
    } else {
        const double s = r - 5.0;
        val = poly7(s, kNormE) / poly7(s, kNormF);
    }
    return (q < 0.0) ? -val : val;
}

// ---- jump stream ----

// Count via the product-of-uniforms loop, then times (sorted), then sizes.
// Sizes are negative exponentials: log(u) / beta with beta = alpha + theta.
inline int draw_jumps_sorted(UniformStream& s, double knuth_l, double beta,
                             double horizon, int cap,
                             std::vector<JumpEvent>& out) {
    double p = 1.0;
    int n = 0;
    for (;;) {
        p = p * s.next();
        if (!(p > knuth_l)) break;
        if (++n > cap) throw asvmc::Error("jump count exceeded the per-path cap");
    }
    out.resize(n);
    for (int i = 0; i < n; ++i) out[i].time = s.next() * horizon;
    std::sort(out.begin(), out.end(),
              [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
    for (int i = 0; i < n; ++i) out[i].size = klog(s.next()) / beta;
    return n;
}

// Accumulate jump sizes at the first grid node at or after each jump time.
// base is indexed node * stride + offset and must be pre-zeroed.
inline void jump_sums_per_node(const EngineConfig& cfg,
                               const std::vector<JumpEvent>& ev, int n_events,
                               double* base, int stride, int offset) {
    for (int i = 0; i < n_events; ++i) {
        int node = static_cast<int>(std::ceil(ev[i].time / cfg.dt));
        node = std::clamp(node, 1, cfg.n_steps);
        base[node * stride + offset] += ev[i].size;
    }
}

// ---- reference path (also the tail path for the SIMD kernel) ----

inline void run_one_path(const EngineConfig& cfg, std::uint32_t path,
                         PathOut& out, double* jump_node_sum,
                         std::vector<JumpEvent>& jump_scratch, double* store_x,
                         double* store_v) {
    const std::uint32_t k0 = static_cast<std::uint32_t>(cfg.seed);
    const std::uint32_t k1 = static_cast<std::uint32_t>(cfg.seed >> 32);
    int n_jumps = 0;
    if (cfg.has_jumps) {
        std::fill_n(jump_node_sum, cfg.n_steps + 1, 0.0);
        UniformStream js{k0, k1, 1u, path};
        n_jumps = draw_jumps_sorted(js, cfg.jump_knuth_l, cfg.jump_beta,
                                    cfg.maturity, cfg.jump_cap, jump_scratch);
        jump_sums_per_node(cfg, jump_scratch, n_jumps, jump_node_sum, 1, 0);
    }
    double x = 0.0;
    double v = cfg.v0;
    double wsum = 0.0;
    double sexp = 0.0;
    if (store_x) {
        store_x[0] = 0.0;
        store_v[0] = (v > 0.0) ? v : 0.0;
    }
    for (int k = 0; k < cfg.n_steps; ++k) {
        const Block b =
            philox_block(k0, k1, static_cast<std::uint32_t>(k), 0u, 0u, path);
        const double z1 = knorminv(words_to_uniform(b.w[0], b.w[1]));
        const double z2 = knorminv(words_to_uniform(b.w[2], b.w[3]));
        const double vhat = (v > 0.0) ? v : 0.0;
        const double sq = std::sqrt(vhat * cfg.dt);
        const double dx = (cfg.xdrift_coef[k] * vhat + cfg.delta) * cfg.dt +
                          sq * (cfg.rho * z1 + cfg.rho_bar * z2);
        const double dv = (cfg.lam_mu - cfg.vdrift_coef[k] * vhat) * cfg.dt +
                          (cfg.zeta * sq) * z1;
        x = x + dx;
        v = v + dv;
        if (cfg.has_jumps) x = x + jump_node_sum[k + 1];
        const int mon = cfg.monitor_of_node[k + 1];
        if (mon >= 0) {
            wsum = wsum + cfg.monitor_weight[mon] * x;
            sexp = sexp + kexp(x);
        }
        if (store_x) {
            store_x[k + 1] = x;
            store_v[k + 1] = (v > 0.0) ? v : 0.0;
        }
    }
    out.x_end = x;
    out.sum_exp = sexp;
    out.weight_sum = wsum;
    out.n_jumps = n_jumps;
}

}  // namespace
