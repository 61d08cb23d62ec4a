#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlsrecon/config.hpp"
#include "nlsrecon/csv_io.hpp"
#include "nlsrecon/pipeline.hpp"

using namespace nlsrecon;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruct the initial field of a 2-D nonlinear Schrodinger equation from lateral Neumann data"};
    app.require_subcommand(1);
    app.footer(std::string("Output directory: the config key output_dir, overridden by the environment variable ") +
               kOutputDirEnv + ".");

    std::string config_path;
    std::vector<std::string> overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (key = value)")->required()->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "override one config key, key=value (repeatable)");
    };

    auto* forward = app.add_subcommand("forward", "simulate the phantom and write clean/noisy trace CSVs");
    add_common(forward);

    std::string trace_path;
    bool quiet = false;
    auto* invert = app.add_subcommand("invert", "run the Picard reconstruction on a trace CSV");
    add_common(invert);
    invert->add_option("--trace", trace_path, "trace CSV (default: the forward output for this config)");
    invert->add_flag("--quiet", quiet, "do not print per-iteration metrics");

    std::string diag_trace;
    auto* diagnose = app.add_subcommand("diagnose", "basis, Carleman-ratio and truncation diagnostics");
    add_common(diagnose);
    diagnose->add_option("--trace", diag_trace, "trace CSV for the truncation tails (default: exp(i t))");

    auto* phantom = app.add_subcommand("phantom", "rasterize the configured phantom to a grid CSV");
    add_common(phantom);

    CLI11_PARSE(app, argc, argv);

    try {
        const PipelineConfig cfg = load_pipeline_config(config_path, overrides);
        const auto t0 = std::chrono::steady_clock::now();

        if (forward->parsed()) {
            const ForwardOutputs out = cmd_forward(cfg);
            std::cout << "wrote " << out.clean_path.string() << " (" << out.clean.values.rows() << " nodes x "
                      << out.clean.values.cols() << " levels)\n";
            if (out.noisy_path) std::cout << "wrote " << out.noisy_path->string() << '\n';
        } else if (invert->parsed()) {
            PicardOptions opts;
            if (!quiet)
                opts.on_iteration = [](const IterationRecord& r) {
                    std::cout << "iter " << r.index << "  rel_change " << format_number(r.rel_change) << "  residual "
                              << format_number(r.residual) << "  ls_iterations " << r.ls_iterations
                              << "  ls_residual " << format_number(r.ls_residual) << std::endl;
                };
            const auto path = trace_path.empty() ? default_trace_path(cfg) : std::filesystem::path(trace_path);
            const InvertOutputs out = cmd_invert(cfg, path, opts);
            std::cout << out.summary;
            std::cout << "wrote " << out.metrics_path.string() << ", " << out.modal_path.string() << ", "
                      << out.u0_path.string() << ", " << out.summary_path.string() << '\n';
        } else if (diagnose->parsed()) {
            std::optional<std::filesystem::path> tp;
            if (!diag_trace.empty()) tp = diag_trace;
            const DiagnoseOutputs out = cmd_diagnose(cfg, tp);
            std::cout << out.summary;
            std::cout << "wrote " << out.basis_path.string() << ", " << out.carleman_path.string() << ", "
                      << out.truncation_path.string() << ", " << out.summary_path.string() << '\n';
        } else if (phantom->parsed()) {
            std::cout << "wrote " << cmd_phantom(cfg).string() << '\n';
        }
        std::cerr << "elapsed " << seconds_since(t0) << " s\n";
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
