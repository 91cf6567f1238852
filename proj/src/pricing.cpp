#include "asvmc/pricing.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "asvmc/esscher.hpp"
#include "kernels/engine_math.inl"

namespace asvmc {

namespace {

// Payoff evaluation and reweighting use the same fixed exponential as the
// path kernels, so a payoff recomputed from a stored path agrees bit for bit
// with the batch summaries.
double payoff_from_summary(const PayoffSpec& p, double s0, int n_monitor,
                           const PathSummary& s) {
    const double avg = (p.kind == PayoffKind::EuropeanPut)
                           ? s0 * kexp(s.x_end)
                           : s0 * s.sum_exp / n_monitor;
    const double gain = p.strike - avg;
    return (gain > 0.0) ? gain : 0.0;
}

void check_payoff_grid(const PayoffSpec& p, const PathGrid& grid) {
    p.validate();
    grid.validate();
    if (p.maturity != grid.maturity)
        throw InvalidParameterError("payoff and grid maturities differ");
    if (p.n_monitor != grid.n_monitor())
        throw InvalidParameterError(
            "payoff monitoring dates do not match the grid");
}

std::uint32_t checked_path_count(long long n_paths) {
    if (n_paths < 1) throw InvalidParameterError("need at least one path");
    if (n_paths > std::numeric_limits<std::uint32_t>::max())
        throw InvalidParameterError(
            "path count exceeds the 32-bit path index space");
    return static_cast<std::uint32_t>(n_paths);
}

// Mean / unbiased variance over the buffered terms, reduced in path order so
// the result never depends on the worker or kernel partition.
EstimatorResult reduce_terms(const std::vector<double>& terms,
                             EstimatorKind kind) {
    const long long n = static_cast<long long>(terms.size());
    double sum = 0.0;
    for (double t : terms) sum += t;
    const double mean = sum / n;
    double ss = 0.0;
    for (double t : terms) ss += (t - mean) * (t - mean);
    EstimatorResult r;
    r.price = mean;
    r.variance = (n > 1) ? ss / (n - 1) : 0.0;
    r.std_error = std::sqrt(r.variance / n);
    r.n_paths = n;
    r.kind = kind;
    return r;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

double put_payoff_european(const Path& path, double strike, double s0) {
    const double gain = strike - s0 * kexp(path.x.back());
    return (gain > 0.0) ? gain : 0.0;
}

double put_payoff_asian(const Path& path, double strike, double s0) {
    double sum_exp = 0.0;
    for (double x : path.x_monitor) sum_exp = sum_exp + kexp(x);
    const double gain =
        strike - s0 * sum_exp / static_cast<double>(path.x_monitor.size());
    return (gain > 0.0) ? gain : 0.0;
}

EstimatorResult price_plain(const ModelSpec& m, const PayoffSpec& p,
                            const PathGrid& grid, long long n_paths,
                            std::uint64_t seed, const RunOptions& opts) {
    m.validate();
    check_payoff_grid(p, grid);
    const std::uint32_t count = checked_path_count(n_paths);
    const EsscherPlan plan = zero_plan(m, grid);

    const auto t0 = std::chrono::steady_clock::now();
    const BatchResult batch = simulate_batch(m, plan, grid, seed, 0, count,
                                             opts.kernel, opts.workers);
    std::vector<double> terms(count);
    for (std::uint32_t i = 0; i < count; ++i)
        terms[i] =
            payoff_from_summary(p, m.heston.s0, grid.n_monitor(), batch.summaries[i]);
    EstimatorResult r = reduce_terms(terms, EstimatorKind::Plain);
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    r.lambda_tilde_nonpos_nodes = batch.lambda_tilde_nonpos_nodes;
    return r;
}

EstimatorResult price_importance(const ModelSpec& m, const PayoffSpec& p,
                                 const EsscherPlan& plan, const PathGrid& grid,
                                 long long n_paths, std::uint64_t seed,
                                 const RunOptions& opts) {
    m.validate();
    check_payoff_grid(p, grid);
    const std::uint32_t count = checked_path_count(n_paths);
    const double log_norm = plan.log_normalizer(m.heston.v0);

    const auto t0 = std::chrono::steady_clock::now();
    const BatchResult batch = simulate_batch(m, plan, grid, seed, 0, count,
                                             opts.kernel, opts.workers);
    std::vector<double> terms(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const PathSummary& s = batch.summaries[i];
        const double payoff =
            payoff_from_summary(p, m.heston.s0, grid.n_monitor(), s);
        if (payoff > 0.0) {
            const double arg = log_norm - s.weight_sum;
            if (arg > 708.0) throw Error("importance weight overflowed");
            terms[i] = (arg < -708.0) ? 0.0 : kexp(arg) * payoff;
        } else {
            terms[i] = 0.0;
        }
    }
    EstimatorResult r = reduce_terms(terms, EstimatorKind::Importance);
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    r.lambda_tilde_nonpos_nodes = batch.lambda_tilde_nonpos_nodes;
    return r;
}

ComparisonRow compare_estimators(const ModelSpec& m, const PayoffSpec& p,
                                 int n_steps, long long n_paths,
                                 std::uint64_t seed, const RunOptions& opts) {
    m.validate();
    p.validate();
    const PathGrid grid = PathGrid::uniform(p.maturity, n_steps, p.n_monitor);

    const auto t0 = std::chrono::steady_clock::now();
    OptimalMeasure tilt = optimal_tilt(m, p);
    const EsscherPlan plan = build_plan(m, tilt.measure, grid);
    const double solve_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::uint64_t state = seed;
    const std::uint64_t seed_plain = splitmix64(state);
    const std::uint64_t seed_importance = splitmix64(state);
    const EstimatorResult plain = price_plain(m, p, grid, n_paths, seed_plain, opts);
    const EstimatorResult importance =
        price_importance(m, p, plan, grid, n_paths, seed_importance, opts);

    const double var_ratio = plain.variance / importance.variance;
    const double time_ratio =
        (plain.elapsed_s > 0.0 && importance.elapsed_s > 0.0)
            ? importance.elapsed_s / plain.elapsed_s
            : 1.0;
    return ComparisonRow{p.strike,   p.maturity, plain,
                         importance, std::move(tilt), var_ratio,
                         var_ratio / time_ratio, solve_s};
}

std::vector<SweepPoint> theta_sweep(const ModelSpec& m, const PayoffSpec& p,
                                    const std::vector<double>& thetas,
                                    int n_steps, long long n_paths,
                                    std::uint64_t seed, const RunOptions& opts) {
    m.validate();
    p.validate();
    if (p.kind != PayoffKind::EuropeanPut)
        throw InvalidParameterError(
            "the tilt sweep is defined for the single-date payoff");
    const PathGrid grid = PathGrid::uniform(p.maturity, n_steps, 1);
    const std::uint32_t count = checked_path_count(n_paths);

    std::vector<SweepPoint> points;
    points.reserve(thetas.size());
    for (double theta : thetas) {
        SweepPoint pt;
        pt.theta = theta;
        try {
            Partition part;
            part.times = {p.maturity};
            const SignedDiscreteMeasure meas{std::move(part), {theta}};
            const EsscherPlan plan = build_plan(m, meas, grid);
            // Common random numbers: every theta reuses the same seed and
            // path indices, so the sweep is smooth in theta.
            const EstimatorResult r =
                price_importance(m, p, plan, grid, count, seed, opts);
            pt.variance = r.variance;
        } catch (const Error&) {
            pt.feasible = false;
        }
        points.push_back(pt);
    }
    return points;
}

}  // namespace asvmc
