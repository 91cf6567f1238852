#include "engine_math.inl"

namespace asvmc::detail {

void run_paths_scalar(const EngineConfig& cfg, std::uint32_t first_path,
                      std::uint32_t count, PathOut* out) {
    std::vector<double> jump_node(cfg.has_jumps ? cfg.n_steps + 1 : 0);
    std::vector<JumpEvent> scratch;
    for (std::uint32_t i = 0; i < count; ++i)
        run_one_path(cfg, first_path + i, out[i], jump_node.data(), scratch,
                     nullptr, nullptr);
}

void run_path_store_scalar(const EngineConfig& cfg, std::uint32_t path_index,
                           double* x_nodes, double* v_nodes, PathOut& out) {
    std::vector<double> jump_node(cfg.has_jumps ? cfg.n_steps + 1 : 0);
    std::vector<JumpEvent> scratch;
    run_one_path(cfg, path_index, out, jump_node.data(), scratch, x_nodes,
                 v_nodes);
}

}  // namespace asvmc::detail
