#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlsrecon/carleman_picard.hpp"
#include "nlsrecon/forward_sim.hpp"
#include "nlsrecon/reduction.hpp"
#include "nlsrecon/spatial_grid.hpp"

namespace nlsrecon {

// File formats. All numbers are written in shortest round-trip decimal form
// (locale independent), lines end in LF, and every file is written to a
// temporary sibling first and renamed into place.
//
//   grid    x,y,re,im                 full grid, y outer, x inner
//   trace   node_id,x,y,t,re,im       boundary node outer, time level inner
//   modal   mode,x,y,re,im            mode outer, interior nodes row-major
//   metrics iter,rel_change,residual,ls_iterations,ls_residual

std::string format_number(double v);

/// Write `contents` to `path` via temp-file-and-rename. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

std::string grid_csv(const SpatialGrid& grid, const Eigen::VectorXcd& full_field);
void write_grid_csv(const std::filesystem::path& path, const SpatialGrid& grid, const Eigen::VectorXcd& full_field);

struct GridCsv {
    GridDescriptor grid;
    Eigen::VectorXcd values;  ///< full grid, row-major
};
GridCsv parse_grid_csv(const std::string& text, const std::string& source_name = "grid CSV");
GridCsv read_grid_csv(const std::filesystem::path& path);

std::string trace_csv(const SpatialGrid& grid, const SpaceTimeTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const SpatialGrid& grid, const SpaceTimeTrace& trace);
/// Recovers grid descriptor and time grid from the node layout; any gap,
/// reordering or truncation is a FormatError.
SpaceTimeTrace parse_trace_csv(const std::string& text, const std::string& source_name = "trace CSV");
SpaceTimeTrace read_trace_csv(const std::filesystem::path& path);

std::string modal_csv(const SpatialGrid& grid, const ModalField& u);
void write_modal_csv(const std::filesystem::path& path, const SpatialGrid& grid, const ModalField& u);
ModalField parse_modal_csv(const std::string& text, const SpatialGrid& grid,
                           const std::string& source_name = "modal CSV");
ModalField read_modal_csv(const std::filesystem::path& path, const SpatialGrid& grid);

std::string metrics_csv(const std::vector<IterationRecord>& history);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);
std::vector<IterationRecord> parse_metrics_csv(const std::string& text, const std::string& source_name = "metrics CSV");
std::vector<IterationRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace nlsrecon
