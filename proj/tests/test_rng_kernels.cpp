#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "../src/kernels/engine_math.inl"
#include "asvmc/esscher.hpp"
#include "asvmc/simulate.hpp"
#include "oracles.hpp"

using namespace asvmc;
using test::heston_bench;
using test::jump_bench;
using test::normal_quantile_oracle;

TEST_CASE("block generator known answers") {
    // Reference vectors for the 4x32, 10-round counter generator.
    {
        const Block b = philox_block(0u, 0u, 0u, 0u, 0u, 0u);
        CHECK(b.w[0] == 0x6627e8d5u);
        CHECK(b.w[1] == 0xe169c58du);
        CHECK(b.w[2] == 0xbc57ac4cu);
        CHECK(b.w[3] == 0x9b00dbd8u);
    }
    {
        const Block b = philox_block(0xffffffffu, 0xffffffffu, 0xffffffffu,
                                     0xffffffffu, 0xffffffffu, 0xffffffffu);
        CHECK(b.w[0] == 0x408f276du);
        CHECK(b.w[1] == 0x41c83b0eu);
        CHECK(b.w[2] == 0xa20bc7c6u);
        CHECK(b.w[3] == 0x6d5451fdu);
    }
    {
        const Block b = philox_block(0xa4093822u, 0x299f31d0u, 0x243f6a88u,
                                     0x85a308d3u, 0x13198a2eu, 0x03707344u);
        CHECK(b.w[0] == 0xd16cfe09u);
        CHECK(b.w[1] == 0x94fdccebu);
        CHECK(b.w[2] == 0x5001e420u);
        CHECK(b.w[3] == 0x24126ea1u);
    }
}

TEST_CASE("uniform mapping covers (0,1) and clamps the top tie") {
    // Smallest and largest representable draws.
    CHECK(words_to_uniform(0u, 0u) == 0x1p-54);
    CHECK(words_to_uniform(0xffffffffu, 0xffffffffu) == kUniformTop);
    CHECK(kUniformTop == std::nextafter(1.0, 0.0));
    // One lattice point below the top: no clamp, exact value.
    CHECK(words_to_uniform(0xffffffffu, 0xffffffdfu) == 1.0 - 0x1p-52);
    // The high word contributes 2^27 lattice units.
    CHECK(words_to_uniform(0x40u, 0u) == (134217728.0 + 0.5) * 0x1p-53);

    double lo = 1.0, hi = 0.0;
    for (std::uint32_t i = 0; i < 2000; ++i) {
        const Block b = philox_block(7u, 9u, i, 0u, 0u, 3u);
        const double u = words_to_uniform(b.w[0], b.w[1]);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform stream consumes the block pairwise") {
    UniformStream s{11u, 22u, 0u, 5u};
    const Block b0 = philox_block(11u, 22u, 0u, 0u, 0u, 5u);
    const Block b1 = philox_block(11u, 22u, 1u, 0u, 0u, 5u);
    CHECK(s.next() == words_to_uniform(b0.w[0], b0.w[1]));
    CHECK(s.next() == words_to_uniform(b0.w[2], b0.w[3]));
    CHECK(s.next() == words_to_uniform(b1.w[0], b1.w[1]));
    CHECK(s.next() == words_to_uniform(b1.w[2], b1.w[3]));

    // Distinct purposes and path indices give unrelated streams.
    UniformStream jump_channel{11u, 22u, 1u, 5u};
    UniformStream other_path{11u, 22u, 0u, 6u};
    UniformStream fresh{11u, 22u, 0u, 5u};
    const double first = fresh.next();
    CHECK(jump_channel.next() != first);
    CHECK(other_path.next() != first);
}

TEST_CASE("normal quantile matches the bisection oracle") {
    const std::vector<double> us = {
        0x1p-54, 1e-12,  1e-9,   1e-6,  1e-3,  0.02,  0.0749, 0.075,
        0.2,     0.4,    0.5,    0.6,   0.8,   0.925, 0.9251, 0.999,
        0.999999, 1.0 - 1e-9, kUniformTop,
    };
    for (double u : us) {
        CAPTURE(u);
        // Evaluate the oracle on the min side: the erfc-based CDF cannot
        // resolve probabilities within an ulp of 1.
        const double ref = (u <= 0.5) ? normal_quantile_oracle(u)
                                      : -normal_quantile_oracle(1.0 - u);
        CHECK(knorminv(u) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(knorminv(0.5) == 0.0);
}

TEST_CASE("exp and log agree with the standard library") {
    CHECK(klog(1.0) == 0.0);
    CHECK(kexp(0.0) == 1.0);
    for (int k = -280; k <= 280; k += 5) {
        for (double mant : {1.0, 1.2345678, 1.4142135623730951, 1.9999999}) {
            const double x = mant * std::pow(10.0, k);
            CAPTURE(x);
            CHECK(klog(x) == doctest::Approx(std::log(x)).epsilon(4e-15));
        }
    }
    for (double x = -600.0; x <= 600.0; x += 7.31) {
        CAPTURE(x);
        CHECK(kexp(x) / std::exp(x) == doctest::Approx(1.0).epsilon(4e-15));
    }
    for (double x : {-1e-12, 1e-12, -0.5, 0.5, 0.34657359027997264, -35.0}) {
        CAPTURE(x);
        CHECK(kexp(x) / std::exp(x) == doctest::Approx(1.0).epsilon(4e-15));
    }
}

TEST_CASE("jump draws: sorted times, negative sizes, correct count law") {
    const double rate = 2.0;
    const double beta = 2.688;
    const double knuth_l = std::exp(-rate);
    std::vector<JumpEvent> ev;
    double count_sum = 0.0, size_sum = 0.0;
    long n_sizes = 0;
    const int n_paths = 4000;
    for (int p = 0; p < n_paths; ++p) {
        UniformStream s{123u, 456u, 1u, static_cast<std::uint32_t>(p)};
        const int n = draw_jumps_sorted(s, knuth_l, beta, 1.0, 1000, ev);
        CHECK(n == static_cast<int>(ev.size()));
        for (int i = 0; i < n; ++i) {
            CHECK(ev[i].time >= 0.0);
            CHECK(ev[i].time <= 1.0);
            CHECK(ev[i].size < 0.0);
            if (i > 0) CHECK(ev[i - 1].time <= ev[i].time);
            size_sum += ev[i].size;
        }
        count_sum += n;
        n_sizes += n;
    }
    // Count mean = rate (Poisson), size mean = -1/beta (exponential).
    CHECK(count_sum / n_paths == doctest::Approx(rate).epsilon(0.06));
    CHECK(size_sum / n_sizes == doctest::Approx(-1.0 / beta).epsilon(0.05));

    // The per-path cap aborts runaway draws.
    UniformStream s{1u, 2u, 1u, 0u};
    CHECK_THROWS_AS(draw_jumps_sorted(s, std::exp(-50.0), beta, 1.0, 3, ev),
                    Error);
}

TEST_CASE("normal draws have the right moments") {
    double mean = 0.0, m2 = 0.0;
    const int n_paths = 100000;
    for (int p = 0; p < n_paths; ++p) {
        const Block b =
            philox_block(12345u, 0u, 0u, 0u, 0u, static_cast<std::uint32_t>(p));
        const double z1 = knorminv(words_to_uniform(b.w[0], b.w[1]));
        const double z2 = knorminv(words_to_uniform(b.w[2], b.w[3]));
        mean += z1 + z2;
        m2 += z1 * z1 + z2 * z2;
    }
    mean /= 2.0 * n_paths;
    m2 /= 2.0 * n_paths;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
}

namespace {

void check_batches_identical(const BatchResult& a, const BatchResult& b) {
    REQUIRE(a.summaries.size() == b.summaries.size());
    for (std::size_t i = 0; i < a.summaries.size(); ++i) {
        CHECK(a.summaries[i].x_end == b.summaries[i].x_end);
        CHECK(a.summaries[i].sum_exp == b.summaries[i].sum_exp);
        CHECK(a.summaries[i].weight_sum == b.summaries[i].weight_sum);
        CHECK(a.summaries[i].n_jumps == b.summaries[i].n_jumps);
    }
}

SignedDiscreteMeasure uniform_measure(double maturity, int n, double w) {
    Partition part;
    part.times.resize(n);
    for (int j = 1; j <= n; ++j) part.times[j - 1] = maturity * j / n;
    part.times.back() = maturity;
    return {std::move(part), std::vector<double>(n, w)};
}

}  // namespace

TEST_CASE("scalar and vector kernels produce identical bits") {
    if (!avx2_available()) {
        MESSAGE("vector kernel not available on this build/CPU; skipping");
        return;
    }
    const std::uint64_t seed = 0xDEADBEEFCAFEBABEull;
    const std::uint32_t first = 17, count = 1003;

    // European tilt on the diffusion benchmark.
    {
        const ModelSpec m = heston_bench();
        const PathGrid grid = PathGrid::uniform(1.0, 64, 1);
        const EsscherPlan plan = build_plan(m, uniform_measure(1.0, 1, -1.2), grid);
        check_batches_identical(
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Scalar),
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Avx2));
    }
    // European tilt with jumps.
    {
        const ModelSpec m = jump_bench();
        const PathGrid grid = PathGrid::uniform(1.0, 64, 1);
        const EsscherPlan plan = build_plan(m, uniform_measure(1.0, 1, -0.8), grid);
        check_batches_identical(
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Scalar),
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Avx2));
    }
    // Discrete-average tilt across four monitoring dates.
    {
        const ModelSpec m = heston_bench();
        const PathGrid grid = PathGrid::uniform(1.0, 64, 4);
        const EsscherPlan plan = build_plan(m, uniform_measure(1.0, 4, -0.3), grid);
        check_batches_identical(
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Scalar),
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Avx2));
    }
    // Base measure (zero plan) with jumps and monitoring dates.
    {
        const ModelSpec m = jump_bench();
        const PathGrid grid = PathGrid::uniform(2.0, 64, 8);
        const EsscherPlan plan = zero_plan(m, grid);
        check_batches_identical(
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Scalar),
            simulate_batch(m, plan, grid, seed, first, count, Kernel::Avx2));
    }
}
