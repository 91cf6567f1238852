#pragma once

#include <cstdint>
#include <vector>

#include "asvmc/esscher.hpp"

namespace asvmc {

// Which inner simulation kernel to run.  Scalar is the reference; the AVX2
// variant reproduces it bit for bit (equivalence-tested) and is selected at
// runtime when the CPU supports it.
enum class Kernel { Auto, Scalar, Avx2 };

bool avx2_available();
Kernel resolve_kernel(Kernel requested);  // resolves Auto, throws if unsupported
const char* kernel_name(Kernel k);

// Uniform Euler grid with monitoring dates on grid nodes.
struct PathGrid {
    double maturity = 1.0;
    int n_steps = 1;
    std::vector<int> monitor_nodes;  // strictly increasing, last == n_steps

    static PathGrid uniform(double maturity, int n_steps, int n_monitor);
    void validate() const;
    double dt() const { return maturity / n_steps; }
    int n_monitor() const { return static_cast<int>(monitor_nodes.size()); }
};

// Change-of-measure plan.  Between monitoring dates the tilted dynamics use
// Psi(s) = psi(t_j - s, Theta_j, B_j) where B_j chains the intervals
// backward: B_n = 0, B_j = psi(t_{j+1} - t_j, Theta_{j+1}, B_{j+1}).
// log_normalizer = Phi + Psi(0) V0 is the exact log of E[exp(sum theta_j X_j)].
struct EsscherPlan {
    SignedDiscreteMeasure measure;
    std::vector<double> psi_tail;    // B_j per interval, j = 1..n
    double phi_at_zero = 0.0;        // Phi(t_1, Theta_1..Theta_n)
    double psi_at_zero = 0.0;        // Psi at s = 0
    double jump_theta = 0.0;         // single-date tilt applied to jumps

    double log_normalizer(double v0) const { return phi_at_zero + psi_at_zero * v0; }
};

EsscherPlan build_plan(const ModelSpec& m, const SignedDiscreteMeasure& theta,
                       const PathGrid& grid);
// Plan with theta identically zero on the grid's monitoring dates; produces
// dynamics identical to the base measure (same stream => same path bits).
EsscherPlan zero_plan(const ModelSpec& m, const PathGrid& grid);

struct JumpEvent {
    double time = 0.0;
    double size = 0.0;  // negative
};

// Jumps under the tilted measure: rate r*alpha/(alpha+theta), sizes
// negative-exponential with parameter alpha+theta.  theta = 0 gives the base
// law.  Requires alpha + theta > 0.
std::vector<JumpEvent> sample_jumps(const JumpParams& j, double theta,
                                    double horizon, std::uint64_t seed,
                                    std::uint32_t path_index);

// One Euler path.  v stores the truncated (nonnegative) variance actually
// used by the scheme; x includes jumps applied at the first node after each
// jump time.
struct Path {
    std::vector<double> x;          // n_steps + 1 values, x[0] = 0
    std::vector<double> v;          // n_steps + 1 values, v[0] = V0
    std::vector<double> x_monitor;  // x at the monitoring nodes
    int n_jumps = 0;
};

Path sample_path(const ModelSpec& m, const PathGrid& grid, std::uint64_t seed,
                 std::uint32_t path_index, Kernel k = Kernel::Auto);
Path sample_path_tilted(const ModelSpec& m, const EsscherPlan& plan,
                        const PathGrid& grid, std::uint64_t seed,
                        std::uint32_t path_index, Kernel k = Kernel::Auto);

// Per-path outputs sufficient for pricing: terminal log price, the sum of
// exp(x) over monitoring dates, the tilt sum, and the jump count.
struct PathSummary {
    double x_end = 0.0;
    double sum_exp = 0.0;
    double weight_sum = 0.0;  // sum_j theta_j x_{t_j}
    int n_jumps = 0;
};

// Batch summaries for paths [first, first + count) under the plan (use
// zero_plan for the base measure).  Deterministic in (seed, path index)
// only; partitioning across workers or kernels never changes the bits.
// Also exposes the count of grid nodes where the tilted mean-reversion rate
// lambda_tilde is nonpositive (a plan diagnostic, path-independent).
struct BatchResult {
    std::vector<PathSummary> summaries;
    int lambda_tilde_nonpos_nodes = 0;
};

BatchResult simulate_batch(const ModelSpec& m, const EsscherPlan& plan,
                           const PathGrid& grid, std::uint64_t seed,
                           std::uint32_t first, std::uint32_t count,
                           Kernel k = Kernel::Auto, int workers = 1);

}  // namespace asvmc
