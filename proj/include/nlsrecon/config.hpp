#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nlsrecon/carleman_picard.hpp"
#include "nlsrecon/forward_sim.hpp"

namespace nlsrecon {

/// Everything one pipeline run needs: forward model, phantom, noise,
/// inversion parameters and output location.
///
/// Text format: one `key = value` per line, `#` starts a comment. Unknown keys,
/// repeated keys (other than `inclusion`) and malformed values are errors that
/// name the source line.
///
/// Keys (required: nx, dt, T, p):
///   name, output_dir, half_width, nx, dt, T, p, q,
///   phantom (none|test1|test2|test3), inclusion (repeatable),
///   noise_delta, seed,
///   lambda, beta, focus (x, y), epsilon, n_modes, n_quad, k_max,
///   reg_w0, reg_w1, reg_w2, ls_tol, ls_max_iter, ls_method (auto|direct|iterative),
///   direct_limit, admissible_bound,
///   diag_lambdas (comma list), diag_n_list (comma list)
///
/// Inclusion syntax: `<re|im> <amplitude> <shape> <params...> [; <shape> <params...>]`
/// where shapes are `disk cx cy r`, `rect x_min x_max y_min y_max`,
/// `square_ring cx cy outer inner`, `annulus cx cy r_in r_out`,
/// `strip a b half_width x_min x_max y_min y_max`. Shapes joined by `;` form a union.
struct PipelineConfig {
    std::string name = "run";
    std::filesystem::path output_dir = ".";

    double half_width = 1.0;
    int nx = 0;
    double dt = 0.0;
    double horizon = 0.0;
    double p = 0.0;
    double q = 1.0;

    std::string phantom_preset = "none";
    Phantom phantom;  ///< preset parts followed by explicit inclusions

    double noise_delta = 0.0;
    std::uint64_t seed = 0;

    InversionConfig inversion;
    int n_quad = 0;  ///< 0 selects max(2N + 16, 256)

    std::vector<double> diag_lambdas{20.0, 40.0, 80.0};
    std::vector<int> diag_n_list{8, 16, 32, 65};

    bool has_truth() const { return !phantom.parts.empty(); }
    GridDescriptor grid() const { return {half_width, nx}; }
};

/// Environment variable that replaces output_dir when set and non-empty.
inline constexpr const char* kOutputDirEnv = "NLSRECON_OUTPUT_DIR";

/// Parse config text. `overrides` are `key=value` strings applied after the file.
PipelineConfig parse_pipeline_config(const std::string& text, const std::string& source_name,
                                     const std::vector<std::string>& overrides = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Parse one inclusion description (the value of an `inclusion` line).
Inclusion parse_inclusion(const std::string& text);

LsMethod parse_ls_method(const std::string& text);
std::string to_string(LsMethod method);

}  // namespace nlsrecon
