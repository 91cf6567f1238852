// AVX2 kernel: four paths per register, mirroring the scalar reference
// operation for operation so results agree bit for bit.  Built only on
// x86-64 with -mavx2; leftover paths fall back to the scalar routine.

#include <immintrin.h>

#include "engine_math.inl"

namespace {

inline __m256d set1(double x) { return _mm256_set1_pd(x); }

// High 32 bits of the four 32x32 unsigned products.
inline __m128i mulhi4(__m128i m, __m128i c) {
    const __m128i h02 = _mm_srli_epi64(_mm_mul_epu32(m, c), 32);
    const __m128i h13 =
        _mm_srli_epi64(_mm_mul_epu32(m, _mm_srli_epi64(c, 32)), 32);
    return _mm_blend_epi32(h02, _mm_slli_epi64(h13, 32), 0b1010);
}

struct Block4 {
    __m128i w[4];
};

inline Block4 philox_block4(std::uint32_t k0, std::uint32_t k1,
                            std::uint32_t draw, std::uint32_t purpose,
                            std::uint32_t first_path) {
    __m128i c0 = _mm_set1_epi32(static_cast<int>(draw));
    __m128i c1 = _mm_setzero_si128();
    __m128i c2 = _mm_set1_epi32(static_cast<int>(purpose));
    __m128i c3 = _mm_setr_epi32(static_cast<int>(first_path),
                                static_cast<int>(first_path + 1),
                                static_cast<int>(first_path + 2),
                                static_cast<int>(first_path + 3));
    __m128i key0 = _mm_set1_epi32(static_cast<int>(k0));
    __m128i key1 = _mm_set1_epi32(static_cast<int>(k1));
    const __m128i m0 = _mm_set1_epi32(static_cast<int>(kPhiloxM0));
    const __m128i m1 = _mm_set1_epi32(static_cast<int>(kPhiloxM1));
    const __m128i w0 = _mm_set1_epi32(static_cast<int>(kPhiloxW0));
    const __m128i w1 = _mm_set1_epi32(static_cast<int>(kPhiloxW1));
    for (int round = 0; round < 10; ++round) {
        const __m128i hi0 = mulhi4(m0, c0);
        const __m128i lo0 = _mm_mullo_epi32(m0, c0);
        const __m128i hi1 = mulhi4(m1, c2);
        const __m128i lo1 = _mm_mullo_epi32(m1, c2);
        c0 = _mm_xor_si128(_mm_xor_si128(hi1, c1), key0);
        c1 = lo1;
        c2 = _mm_xor_si128(_mm_xor_si128(hi0, c3), key1);
        c3 = lo0;
        key0 = _mm_add_epi32(key0, w0);
        key1 = _mm_add_epi32(key1, w1);
    }
    return {{c0, c1, c2, c3}};
}

inline __m256d words_to_uniform4(__m128i hi, __m128i lo) {
    const __m256d h = _mm256_cvtepi32_pd(_mm_srli_epi32(hi, 6));
    const __m256d l = _mm256_cvtepi32_pd(_mm_srli_epi32(lo, 5));
    const __m256d mant = _mm256_add_pd(_mm256_mul_pd(h, set1(134217728.0)), l);
    const __m256d u =
        _mm256_mul_pd(_mm256_add_pd(mant, set1(0.5)), set1(0x1p-53));
    return _mm256_min_pd(u, set1(kUniformTop));
}

// Low 32 bits of each 64-bit lane as four packed int32.
inline __m128i low_dwords(__m256i x) {
    return _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(
        x, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0)));
}

inline __m256d klog4(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    __m256d e = _mm256_sub_pd(
        _mm256_cvtepi32_pd(low_dwords(_mm256_srli_epi64(bits, 52))),
        set1(1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
        _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
        _mm256_set1_epi64x(0x3FF0000000000000ll)));
    const __m256d fold = _mm256_cmp_pd(m, set1(kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), fold);
    e = _mm256_add_pd(e, _mm256_and_pd(fold, set1(1.0)));
    const __m256d one = set1(1.0);
    const __m256d t =
        _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d s = _mm256_mul_pd(t, t);
    __m256d p = set1(kLogC[10]);
    for (int i = 9; i >= 0; --i)
        p = _mm256_add_pd(_mm256_mul_pd(p, s), set1(kLogC[i]));
    const __m256d lm = _mm256_mul_pd(_mm256_mul_pd(set1(2.0), t), p);
    return _mm256_add_pd(_mm256_mul_pd(e, set1(kLn2Hi)),
                         _mm256_add_pd(lm, _mm256_mul_pd(e, set1(kLn2Lo))));
}

inline __m256d kexp4(__m256d x) {
    const __m256d kd =
        _mm256_add_pd(_mm256_mul_pd(x, set1(kInvLn2)), set1(kExpMagic));
    const __m256d k = _mm256_sub_pd(kd, set1(kExpMagic));
    const __m256d r =
        _mm256_sub_pd(_mm256_sub_pd(x, _mm256_mul_pd(k, set1(kLn2Hi))),
                      _mm256_mul_pd(k, set1(kLn2Lo)));
    __m256d p = set1(kExpC[13]);
    for (int i = 12; i >= 0; --i)
        p = _mm256_add_pd(_mm256_mul_pd(p, r), set1(kExpC[i]));
    const __m256i ki = _mm256_cvtepi32_epi64(low_dwords(_mm256_castpd_si256(kd)));
    const __m256i scale = _mm256_slli_epi64(
        _mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(scale));
}

inline __m256d poly7v(__m256d r, const double* c) {
    __m256d p = set1(c[7]);
    for (int i = 6; i >= 0; --i)
        p = _mm256_add_pd(_mm256_mul_pd(p, r), set1(c[i]));
    return p;
}

inline __m256d knorminv4(__m256d u) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d signbit = set1(-0.0);
    const __m256d q = _mm256_sub_pd(u, set1(0.5));

    const __m256d rc = _mm256_sub_pd(set1(0.180625), _mm256_mul_pd(q, q));
    const __m256d val_c =
        _mm256_mul_pd(q, _mm256_div_pd(poly7v(rc, kNormA), poly7v(rc, kNormB)));

    const __m256d qneg = _mm256_cmp_pd(q, zero, _CMP_LT_OQ);
    const __m256d rt0 = _mm256_blendv_pd(_mm256_sub_pd(set1(1.0), u), u, qneg);
    const __m256d rt = _mm256_sqrt_pd(_mm256_xor_pd(klog4(rt0), signbit));
    const __m256d mid = _mm256_cmp_pd(rt, set1(5.0), _CMP_LE_OQ);
    const __m256d sm = _mm256_sub_pd(rt, set1(1.6));
    const __m256d val_m = _mm256_div_pd(poly7v(sm, kNormC), poly7v(sm, kNormD));
    const __m256d sf = _mm256_sub_pd(rt, set1(5.0));
    const __m256d val_f = _mm256_div_pd(poly7v(sf, kNormE), poly7v(sf, kNormF));
    __m256d val_t = _mm256_blendv_pd(val_f, val_m, mid);
    val_t = _mm256_blendv_pd(val_t, _mm256_xor_pd(val_t, signbit), qneg);

    const __m256d absq = _mm256_andnot_pd(signbit, q);
    const __m256d central = _mm256_cmp_pd(absq, set1(0.425), _CMP_LE_OQ);
    return _mm256_blendv_pd(val_t, val_c, central);
}

// Four paths in lockstep; jump sums, when present, are laid out
// node-major with one lane per path.
inline void run_block4(const EngineConfig& cfg, std::uint32_t first_path,
                       PathOut* out, const double* jump_node4,
                       const int* njumps4) {
    const std::uint32_t k0 = static_cast<std::uint32_t>(cfg.seed);
    const std::uint32_t k1 = static_cast<std::uint32_t>(cfg.seed >> 32);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d dt = set1(cfg.dt);
    const __m256d delta = set1(cfg.delta);
    const __m256d lam_mu = set1(cfg.lam_mu);
    const __m256d rho = set1(cfg.rho);
    const __m256d rho_bar = set1(cfg.rho_bar);
    const __m256d zeta = set1(cfg.zeta);
    __m256d x = zero;
    __m256d v = set1(cfg.v0);
    __m256d wsum = zero;
    __m256d sexp = zero;
    for (int k = 0; k < cfg.n_steps; ++k) {
        const Block4 b =
            philox_block4(k0, k1, static_cast<std::uint32_t>(k), 0u, first_path);
        const __m256d z1 = knorminv4(words_to_uniform4(b.w[0], b.w[1]));
        const __m256d z2 = knorminv4(words_to_uniform4(b.w[2], b.w[3]));
        const __m256d vhat =
            _mm256_blendv_pd(zero, v, _mm256_cmp_pd(v, zero, _CMP_GT_OQ));
        const __m256d sq = _mm256_sqrt_pd(_mm256_mul_pd(vhat, dt));
        const __m256d zmix =
            _mm256_add_pd(_mm256_mul_pd(rho, z1), _mm256_mul_pd(rho_bar, z2));
        const __m256d dx = _mm256_add_pd(
            _mm256_mul_pd(
                _mm256_add_pd(_mm256_mul_pd(set1(cfg.xdrift_coef[k]), vhat),
                              delta),
                dt),
            _mm256_mul_pd(sq, zmix));
        const __m256d dv = _mm256_add_pd(
            _mm256_mul_pd(
                _mm256_sub_pd(lam_mu,
                              _mm256_mul_pd(set1(cfg.vdrift_coef[k]), vhat)),
                dt),
            _mm256_mul_pd(_mm256_mul_pd(zeta, sq), z1));
        x = _mm256_add_pd(x, dx);
        v = _mm256_add_pd(v, dv);
        if (cfg.has_jumps)
            x = _mm256_add_pd(x, _mm256_loadu_pd(jump_node4 + (k + 1) * 4));
        const int mon = cfg.monitor_of_node[k + 1];
        if (mon >= 0) {
            wsum = _mm256_add_pd(
                wsum, _mm256_mul_pd(set1(cfg.monitor_weight[mon]), x));
            sexp = _mm256_add_pd(sexp, kexp4(x));
        }
    }
    double xs[4], ss[4], ws[4];
    _mm256_storeu_pd(xs, x);
    _mm256_storeu_pd(ss, sexp);
    _mm256_storeu_pd(ws, wsum);
    for (int l = 0; l < 4; ++l)
        out[l] = {xs[l], ss[l], ws[l], njumps4 ? njumps4[l] : 0};
}

}  // namespace

namespace asvmc::detail {

void run_paths_avx2(const EngineConfig& cfg, std::uint32_t first_path,
                    std::uint32_t count, PathOut* out) {
    std::vector<double> jump_node4;
    std::vector<double> jump_node_scalar(cfg.has_jumps ? cfg.n_steps + 1 : 0);
    std::vector<JumpEvent> scratch;
    if (cfg.has_jumps)
        jump_node4.assign(static_cast<std::size_t>(cfg.n_steps + 1) * 4, 0.0);
    int njumps4[4] = {0, 0, 0, 0};
    std::uint32_t i = 0;
    for (; i + 4 <= count; i += 4) {
        if (cfg.has_jumps) {
            std::fill(jump_node4.begin(), jump_node4.end(), 0.0);
            for (int l = 0; l < 4; ++l) {
                UniformStream js{static_cast<std::uint32_t>(cfg.seed),
                                 static_cast<std::uint32_t>(cfg.seed >> 32), 1u,
                                 first_path + i + l};
                njumps4[l] =
                    draw_jumps_sorted(js, cfg.jump_knuth_l, cfg.jump_beta,
                                      cfg.maturity, cfg.jump_cap, scratch);
                jump_sums_per_node(cfg, scratch, njumps4[l], jump_node4.data(),
                                   4, l);
            }
        }
        run_block4(cfg, first_path + i, out + i,
                   cfg.has_jumps ? jump_node4.data() : nullptr,
                   cfg.has_jumps ? njumps4 : nullptr);
    }
    for (; i < count; ++i)
        run_one_path(cfg, first_path + i, out[i], jump_node_scalar.data(),
                     scratch, nullptr, nullptr);
}

}  // namespace asvmc::detail
