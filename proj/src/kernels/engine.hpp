#pragma once

#include <cstdint>

// Internal interface between the simulation front end and the path kernels.
// All model- and plan-dependent coefficients are precomputed into flat arrays
// so the kernels run identical primitive operations lane for lane.
namespace asvmc::detail {

struct EngineConfig {
    int n_steps = 0;
    double dt = 0.0;
    double v0 = 0.0;
    double lam_mu = 0.0;   // lambda * mu
    double zeta = 0.0;
    double rho = 0.0;
    double rho_bar = 0.0;  // sqrt(1 - rho^2)
    double delta = 0.0;    // constant drift (jump compensator; 0 without jumps)

    const double* xdrift_coef = nullptr;    // [n_steps]: multiplies vhat in dX
    const double* vdrift_coef = nullptr;    // [n_steps]: lambda_tilde at the node
    const int* monitor_of_node = nullptr;   // [n_steps + 1]: index or -1
    const double* monitor_weight = nullptr; // one tilt weight per monitor date

    bool has_jumps = false;
    double jump_knuth_l = 1.0;  // exp(-rate * maturity) for the count loop
    double jump_beta = 0.0;     // alpha + theta
    double maturity = 0.0;
    int jump_cap = 1000;

    std::uint64_t seed = 0;
};

struct PathOut {
    double x_end = 0.0;
    double sum_exp = 0.0;
    double weight_sum = 0.0;
    int n_jumps = 0;
};

void run_paths_scalar(const EngineConfig& cfg, std::uint32_t first_path,
                      std::uint32_t count, PathOut* out);
// Defined only when the build includes the AVX2 translation unit.
void run_paths_avx2(const EngineConfig& cfg, std::uint32_t first_path,
                    std::uint32_t count, PathOut* out);

// Full-trajectory variant (scalar reference ops; node arrays have
// n_steps + 1 entries, v truncated at zero as used by the scheme).
void run_path_store_scalar(const EngineConfig& cfg, std::uint32_t path_index,
                           double* x_nodes, double* v_nodes, PathOut& out);

bool cpu_has_avx2();

}  // namespace asvmc::detail
