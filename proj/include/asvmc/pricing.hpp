#pragma once

#include "asvmc/simulate.hpp"

namespace asvmc {

// Payoffs evaluated on a recorded path (the batch pricers use the summary
// fields; these exist for tests and single-path inspection).
double put_payoff_european(const Path& path, double strike, double s0);
double put_payoff_asian(const Path& path, double strike, double s0);

struct RunOptions {
    int workers = 1;
    Kernel kernel = Kernel::Auto;
};

enum class EstimatorKind { Plain, Importance };

struct EstimatorResult {
    double price = 0.0;
    double std_error = 0.0;
    double variance = 0.0;  // sample variance of the per-path terms
    long long n_paths = 0;
    double elapsed_s = 0.0;  // simulation + aggregation, excludes plan/solver
    EstimatorKind kind = EstimatorKind::Plain;
    int lambda_tilde_nonpos_nodes = 0;
};

EstimatorResult price_plain(const ModelSpec& m, const PayoffSpec& p,
                            const PathGrid& grid, long long n_paths,
                            std::uint64_t seed, const RunOptions& opts = {});
EstimatorResult price_importance(const ModelSpec& m, const PayoffSpec& p,
                                 const EsscherPlan& plan, const PathGrid& grid,
                                 long long n_paths, std::uint64_t seed,
                                 const RunOptions& opts = {});

// Solves the optimal tilt, runs both estimators on independent streams
// derived from the seed, and reports the benchmark comparison row.
struct ComparisonRow {
    double strike = 0.0;
    double maturity = 0.0;
    EstimatorResult plain;
    EstimatorResult importance;
    OptimalMeasure tilt;
    double var_ratio = 0.0;  // plain variance / importance variance
    double adj_ratio = 0.0;  // var_ratio divided by the IS/plain time ratio
    double solve_s = 0.0;
};

ComparisonRow compare_estimators(const ModelSpec& m, const PayoffSpec& p,
                                 int n_steps, long long n_paths,
                                 std::uint64_t seed, const RunOptions& opts = {});

// Empirical per-path variance of the importance-sampled term as a function
// of a single tilt weight theta (European payoff; common random numbers
// across grid points).  Infeasible thetas are flagged and skipped.
struct SweepPoint {
    double theta = 0.0;
    double variance = 0.0;
    bool feasible = true;
};

std::vector<SweepPoint> theta_sweep(const ModelSpec& m, const PayoffSpec& p,
                                    const std::vector<double>& thetas,
                                    int n_steps, long long n_paths,
                                    std::uint64_t seed,
                                    const RunOptions& opts = {});

}  // namespace asvmc
