#include "asvmc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

#include "kernels/engine_math.inl"

namespace asvmc {

namespace {

// Both the standalone jump sampler and the batch configuration must agree on
// the Knuth constant bit for bit, so it is computed in exactly one place.
double jump_knuth_l(const JumpParams& j, double theta, double horizon) {
    const double rate = j.r * j.alpha / (j.alpha + theta);
    return std::exp(-rate * horizon);
}

void check_plan_matches_grid(const EsscherPlan& plan, const PathGrid& grid) {
    const int n = grid.n_monitor();
    if (plan.measure.size() != n)
        throw InvalidParameterError(
            "plan support size does not match the monitoring dates");
    if (static_cast<int>(plan.psi_tail.size()) != n)
        throw InvalidParameterError("plan is missing its interval tail values");
    const double tol = 1e-9 * grid.maturity;
    for (int j = 0; j < n; ++j) {
        const double grid_date = grid.monitor_nodes[j] * grid.dt();
        if (std::fabs(plan.measure.support().times[j] - grid_date) > tol)
            throw InvalidParameterError(
                "plan support dates do not lie on the monitoring nodes");
    }
}

// Per-node Euler drift coefficients under the tilted measure.  On the
// interval ending at monitoring node t_j the running exponent coefficient is
// Psi(s) = psi(t_j - s, Theta_j, B_j), and at grid node s_k:
//   dX coefficient of vhat:  Theta_j + zeta rho Psi - 1/2
//   dV mean-reversion rate:  lambda_tilde = lambda - zeta rho Theta_j - zeta^2 Psi
struct NodeCoefs {
    std::vector<double> xdrift;        // [n_steps]
    std::vector<double> vdrift;        // [n_steps]
    std::vector<int> monitor_of_node;  // [n_steps + 1], -1 off monitors
    std::vector<double> monitor_weight;
    int lambda_tilde_nonpos = 0;
};

NodeCoefs make_node_coefs(const ModelSpec& m, const EsscherPlan& plan,
                          const PathGrid& grid) {
    const int n_steps = grid.n_steps;
    const auto& nodes = grid.monitor_nodes;
    const auto& tails = plan.measure.cumulative();
    const double dt = grid.dt();
    const double zr = m.heston.zeta * m.heston.rho;
    const double z2 = m.heston.zeta * m.heston.zeta;

    NodeCoefs c;
    c.xdrift.resize(n_steps);
    c.vdrift.resize(n_steps);
    c.monitor_of_node.assign(n_steps + 1, -1);
    for (int j = 0; j < grid.n_monitor(); ++j) c.monitor_of_node[nodes[j]] = j;
    c.monitor_weight = plan.measure.weights();

    int j = 0;  // index of the first monitoring node past step k
    for (int k = 0; k < n_steps; ++k) {
        while (nodes[j] <= k) ++j;
        const double theta = tails[j];
        const double tail = plan.psi_tail[j];
        const double psi = (theta == 0.0 && tail == 0.0)
                               ? 0.0
                               : riccati_psi(m, (nodes[j] - k) * dt, theta, tail);
        c.xdrift[k] = theta + zr * psi - 0.5;
        c.vdrift[k] = (m.heston.lambda - zr * theta) - z2 * psi;
        if (c.vdrift[k] <= 0.0) ++c.lambda_tilde_nonpos;
    }
    return c;
}

detail::EngineConfig make_config(const ModelSpec& m, const EsscherPlan& plan,
                                 const PathGrid& grid, const NodeCoefs& c,
                                 std::uint64_t seed) {
    detail::EngineConfig cfg;
    cfg.n_steps = grid.n_steps;
    cfg.dt = grid.dt();
    cfg.v0 = m.heston.v0;
    cfg.lam_mu = m.heston.lambda * m.heston.mu;
    cfg.zeta = m.heston.zeta;
    cfg.rho = m.heston.rho;
    cfg.rho_bar = std::sqrt(1.0 - m.heston.rho * m.heston.rho);
    cfg.delta = m.martingale_drift();
    cfg.xdrift_coef = c.xdrift.data();
    cfg.vdrift_coef = c.vdrift.data();
    cfg.monitor_of_node = c.monitor_of_node.data();
    cfg.monitor_weight = c.monitor_weight.data();
    cfg.has_jumps = m.has_jumps();
    if (cfg.has_jumps) {
        cfg.jump_knuth_l = jump_knuth_l(*m.jumps, plan.jump_theta, grid.maturity);
        cfg.jump_beta = m.jumps->alpha + plan.jump_theta;
    }
    cfg.maturity = grid.maturity;
    cfg.seed = seed;
    return cfg;
}

void run_range(const detail::EngineConfig& cfg, Kernel k, std::uint32_t first,
               std::uint32_t count, detail::PathOut* out) {
#ifdef ASVMC_BUILD_AVX2
    if (k == Kernel::Avx2) {
        detail::run_paths_avx2(cfg, first, count, out);
        return;
    }
#endif
    (void)k;
    detail::run_paths_scalar(cfg, first, count, out);
}

}  // namespace

PathGrid PathGrid::uniform(double maturity, int n_steps, int n_monitor) {
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw InvalidParameterError("maturity must be positive and finite");
    if (n_steps < 1) throw InvalidParameterError("need at least one Euler step");
    if (n_monitor < 1)
        throw InvalidParameterError("need at least one monitoring date");
    if (n_monitor > n_steps || n_steps % n_monitor != 0)
        throw InvalidParameterError(
            "the step count must be a multiple of the monitoring count");
    PathGrid g;
    g.maturity = maturity;
    g.n_steps = n_steps;
    const int stride = n_steps / n_monitor;
    g.monitor_nodes.resize(n_monitor);
    for (int j = 0; j < n_monitor; ++j) g.monitor_nodes[j] = (j + 1) * stride;
    return g;
}

void PathGrid::validate() const {
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw InvalidParameterError("maturity must be positive and finite");
    if (n_steps < 1) throw InvalidParameterError("need at least one Euler step");
    if (monitor_nodes.empty())
        throw InvalidParameterError("need at least one monitoring node");
    int prev = 0;
    for (int node : monitor_nodes) {
        if (node <= prev)
            throw InvalidParameterError("monitoring nodes must be increasing");
        prev = node;
    }
    if (monitor_nodes.back() != n_steps)
        throw InvalidParameterError("the last monitoring node must be the maturity");
}

EsscherPlan build_plan(const ModelSpec& m, const SignedDiscreteMeasure& theta,
                       const PathGrid& grid) {
    m.validate();
    grid.validate();
    const int n = theta.size();
    if (n != grid.n_monitor())
        throw InvalidParameterError(
            "measure support does not match the monitoring dates");
    const double dt = grid.dt();
    const double tol = 1e-9 * grid.maturity;
    for (int j = 0; j < n; ++j)
        if (std::fabs(theta.support().times[j] - grid.monitor_nodes[j] * dt) > tol)
            throw InvalidParameterError(
                "measure support dates do not lie on the monitoring nodes");

    const bool all_zero = std::all_of(theta.weights().begin(),
                                      theta.weights().end(),
                                      [](double w) { return w == 0.0; });
    if (all_zero) return zero_plan(m, grid);
    if (m.has_jumps() && n > 1)
        throw InfeasibleError(
            "jump models support a tilt on the maturity date only");

    // Backward chain across the intervals: the terminal condition B_j of
    // interval j is the chained psi of everything to its right.
    const auto& tails = theta.cumulative();
    std::vector<double> psi_tail(n);
    double w = 0.0;
    double phi_sum = 0.0;
    for (int j = n - 1; j >= 0; --j) {
        const int lo = (j == 0) ? 0 : grid.monitor_nodes[j - 1];
        const double span = (grid.monitor_nodes[j] - lo) * dt;
        psi_tail[j] = w;
        phi_sum += riccati_phi(m, span, tails[j], w);
        w = riccati_psi(m, span, tails[j], w);
    }
    const double j_theta = m.has_jumps() ? tails[0] : 0.0;
    return EsscherPlan{theta, std::move(psi_tail), phi_sum, w, j_theta};
}

EsscherPlan zero_plan(const ModelSpec& m, const PathGrid& grid) {
    m.validate();
    grid.validate();
    const int n = grid.n_monitor();
    Partition part;
    part.times.resize(n);
    for (int j = 0; j < n; ++j)
        part.times[j] = grid.monitor_nodes[j] * grid.dt();
    part.times.back() = grid.maturity;
    // Literal zeros: the identity tilt must not pick up closed-form roundoff
    // dust, or the base-measure path bits would depend on how the plan was
    // built.
    SignedDiscreteMeasure zero(std::move(part), std::vector<double>(n, 0.0));
    return EsscherPlan{std::move(zero), std::vector<double>(n, 0.0), 0.0, 0.0,
                       0.0};
}

std::vector<JumpEvent> sample_jumps(const JumpParams& j, double theta,
                                    double horizon, std::uint64_t seed,
                                    std::uint32_t path_index) {
    j.validate();
    if (!(j.alpha + theta > 0.0))
        throw InvalidParameterError("jump tilt must stay above -alpha");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidParameterError("horizon must be positive and finite");
    UniformStream s{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 1u, path_index};
    std::vector<JumpEvent> events;
    draw_jumps_sorted(s, jump_knuth_l(j, theta, horizon), j.alpha + theta,
                      horizon, 1000, events);
    return events;
}

Path sample_path_tilted(const ModelSpec& m, const EsscherPlan& plan,
                        const PathGrid& grid, std::uint64_t seed,
                        std::uint32_t path_index, Kernel k) {
    m.validate();
    grid.validate();
    check_plan_matches_grid(plan, grid);
    resolve_kernel(k);  // validates the request; the stored-path walk is the
                        // scalar reference, which every kernel matches bitwise
    const NodeCoefs coefs = make_node_coefs(m, plan, grid);
    const detail::EngineConfig cfg = make_config(m, plan, grid, coefs, seed);

    Path path;
    path.x.resize(grid.n_steps + 1);
    path.v.resize(grid.n_steps + 1);
    detail::PathOut out;
    detail::run_path_store_scalar(cfg, path_index, path.x.data(), path.v.data(),
                                  out);
    path.n_jumps = out.n_jumps;
    path.x_monitor.resize(grid.n_monitor());
    for (int j = 0; j < grid.n_monitor(); ++j)
        path.x_monitor[j] = path.x[grid.monitor_nodes[j]];
    return path;
}

Path sample_path(const ModelSpec& m, const PathGrid& grid, std::uint64_t seed,
                 std::uint32_t path_index, Kernel k) {
    return sample_path_tilted(m, zero_plan(m, grid), grid, seed, path_index, k);
}

BatchResult simulate_batch(const ModelSpec& m, const EsscherPlan& plan,
                           const PathGrid& grid, std::uint64_t seed,
                           std::uint32_t first, std::uint32_t count, Kernel k,
                           int workers) {
    m.validate();
    grid.validate();
    check_plan_matches_grid(plan, grid);
    if (workers < 1) throw InvalidParameterError("need at least one worker");
    const Kernel kernel = resolve_kernel(k);

    const NodeCoefs coefs = make_node_coefs(m, plan, grid);
    const detail::EngineConfig cfg = make_config(m, plan, grid, coefs, seed);

    BatchResult res;
    res.lambda_tilde_nonpos_nodes = coefs.lambda_tilde_nonpos;
    res.summaries.resize(count);
    if (count == 0) return res;

    std::vector<detail::PathOut> raw(count);
    const std::uint32_t n_workers = std::min<std::uint32_t>(
        static_cast<std::uint32_t>(workers), count);
    if (n_workers == 1) {
        run_range(cfg, kernel, first, count, raw.data());
    } else {
        // Fixed partition by path index; the bits cannot depend on it because
        // every path is a pure function of (seed, path index).
        const std::uint32_t chunk = (count + n_workers - 1) / n_workers;
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n_workers);
        for (std::uint32_t w = 0; w < n_workers; ++w) {
            const std::uint32_t lo = w * chunk;
            const std::uint32_t hi = std::min(count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, w, lo, hi] {
                try {
                    run_range(cfg, kernel, first + lo, hi - lo, raw.data() + lo);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (std::uint32_t i = 0; i < count; ++i)
        res.summaries[i] = {raw[i].x_end, raw[i].sum_exp, raw[i].weight_sum,
                            raw[i].n_jumps};
    return res;
}

}  // namespace asvmc
