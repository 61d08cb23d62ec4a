#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlsrecon/carleman_picard.hpp"
#include "nlsrecon/config.hpp"
#include "nlsrecon/forward_sim.hpp"
#include "nlsrecon/reduction.hpp"

namespace nlsrecon {

struct ForwardOutputs {
    SpaceTimeTrace clean;
    std::optional<SpaceTimeTrace> noisy;  ///< present when noise_delta > 0
    std::filesystem::path clean_path;
    std::optional<std::filesystem::path> noisy_path;
};

/// Simulate the configured phantom; write `<name>_trace_clean.csv` and, when
/// noise_delta > 0, `<name>_trace_noisy.csv`.
ForwardOutputs cmd_forward(const PipelineConfig& cfg);

/// In-memory forward run without file output.
ForwardOutputs forward_traces(const PipelineConfig& cfg);

struct InvertOutputs {
    ReconstructionReport report;
    std::string summary;
    std::optional<Point> centroid_re, centroid_im;
    std::optional<Point> truth_centroid_re, truth_centroid_im;
    std::filesystem::path metrics_path, modal_path, u0_path, summary_path;
};

/// Run the Picard reconstruction on an in-memory trace. Checks the trace grid
/// and horizon against the config.
InvertOutputs invert_trace(const PipelineConfig& cfg, const SpaceTimeTrace& trace,
                           const PicardOptions& options = {});

/// Reads the trace, inverts, and writes `<name>_metrics.csv`, `<name>_modal.csv`,
/// `<name>_u0.csv` and `<name>_summary.txt`.
InvertOutputs cmd_invert(const PipelineConfig& cfg, const std::filesystem::path& trace_path,
                         const PicardOptions& options = {});

/// Path invert reads by default: the noisy trace when noise is configured, else the clean one.
std::filesystem::path default_trace_path(const PipelineConfig& cfg);

struct DiagnoseOutputs {
    double gram_deviation = 0.0;
    double s_identity_deviation = 0.0;
    std::vector<CarlemanRatio> carleman;
    std::vector<TruncationEntry> truncation;
    std::string summary;
    std::filesystem::path basis_path, carleman_path, truncation_path, summary_path;
};

/// Basis table, Gram and s-identity checks, Carleman ratios over diag_lambdas
/// (smooth bump test field), and truncation tails over diag_n_list. The tails
/// use the boundary node of largest energy in `trace_path` when given,
/// otherwise the signal e^{it} on the configured time grid.
DiagnoseOutputs cmd_diagnose(const PipelineConfig& cfg,
                             const std::optional<std::filesystem::path>& trace_path = std::nullopt);

/// Rasterize the configured phantom to `<name>_phantom.csv`.
std::filesystem::path cmd_phantom(const PipelineConfig& cfg);

TimeBasis basis_for(const PipelineConfig& cfg);

}  // namespace nlsrecon
