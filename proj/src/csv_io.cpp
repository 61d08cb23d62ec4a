#include "nlsrecon/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace nlsrecon {

namespace fs = std::filesystem;

std::string format_number(double v) {
    if (!std::isfinite(v)) throw FormatError("refusing to write a non-finite number");
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw FormatError("number formatting failed");
    return {buf, ptr};
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ignored;
            fs::remove(tmp, ignored);
            throw FormatError("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw FormatError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

struct Table {
    std::vector<std::vector<double>> rows;
};

double parse_field(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw FormatError(where + ": malformed number '" + std::string(s) + "'");
    return v;
}

Table parse_table(const std::string& text, const std::string& header, const std::string& source) {
    Table t;
    std::size_t cols = 1;
    for (char c : header) cols += c == ',';
    std::size_t pos = 0;
    int lineno = 0;
    bool seen_header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!seen_header) {
            if (line != header)
                throw FormatError(source + ": expected header '" + header + "', got '" + std::string(line) + "'");
            seen_header = true;
            continue;
        }
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        std::vector<double> row;
        row.reserve(cols);
        std::size_t a = 0;
        while (true) {
            const std::size_t b = line.find(',', a);
            row.push_back(parse_field(line.substr(a, b == std::string_view::npos ? line.size() - a : b - a), where));
            if (b == std::string_view::npos) break;
            a = b + 1;
        }
        if (row.size() != cols)
            throw FormatError(where + ": expected " + std::to_string(cols) + " fields, got " +
                              std::to_string(row.size()));
        t.rows.push_back(std::move(row));
    }
    if (!seen_header) throw FormatError(source + ": empty file");
    return t;
}

bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(scale)); }

int as_index(double v, const std::string& where) {
    if (v != std::floor(v) || v < 0 || v > 1e9) throw FormatError(where + ": expected a nonnegative integer");
    return static_cast<int>(v);
}

void put(std::string& out, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += f;
        first = false;
    }
    out += '\n';
}

}  // namespace

std::string grid_csv(const SpatialGrid& grid, const Eigen::VectorXcd& full_field) {
    const int n = grid.n_per_side();
    require(full_field.size() == static_cast<Eigen::Index>(n) * n, "grid field size does not match the grid");
    std::string out = "x,y,re,im\n";
    out.reserve(out.size() + static_cast<std::size_t>(full_field.size()) * 48);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const cplx v = full_field[grid.full_index({i, j})];
            put(out, {format_number(grid.coord(i)), format_number(grid.coord(j)), format_number(v.real()),
                      format_number(v.imag())});
        }
    return out;
}

void write_grid_csv(const fs::path& path, const SpatialGrid& grid, const Eigen::VectorXcd& full_field) {
    write_file_atomic(path, grid_csv(grid, full_field));
}

GridCsv parse_grid_csv(const std::string& text, const std::string& source) {
    const Table t = parse_table(text, "x,y,re,im", source);
    const auto rows = static_cast<long long>(t.rows.size());
    const int n = static_cast<int>(std::llround(std::sqrt(static_cast<double>(rows))));
    if (static_cast<long long>(n) * n != rows || n < 5)
        throw FormatError(source + ": " + std::to_string(rows) + " rows is not a square grid of side >= 5");
    const double R = -t.rows[0][0];
    if (!(R > 0.0) || !close(t.rows[0][1], -R, R)) throw FormatError(source + ": first node is not the (-R,-R) corner");
    const SpatialGrid grid(R, n);
    GridCsv g{grid.descriptor(), Eigen::VectorXcd(rows)};
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const auto& r = t.rows[static_cast<std::size_t>(grid.full_index({i, j}))];
            if (!close(r[0], grid.coord(i), R) || !close(r[1], grid.coord(j), R))
                throw FormatError(source + ": node (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") is out of row-major order");
            g.values[grid.full_index({i, j})] = {r[2], r[3]};
        }
    return g;
}

GridCsv read_grid_csv(const fs::path& path) { return parse_grid_csv(read_file(path), path.string()); }

std::string trace_csv(const SpatialGrid& grid, const SpaceTimeTrace& trace) {
    require(trace.grid == grid.descriptor(), "trace grid does not match");
    const int nb = grid.n_boundary();
    const int levels = trace.times.n_levels();
    require(trace.values.rows() == nb && trace.values.cols() == levels, "trace shape does not match its grid");
    std::string out = "node_id,x,y,t,re,im\n";
    out.reserve(out.size() + static_cast<std::size_t>(nb) * levels * 64);
    for (int b = 0; b < nb; ++b) {
        const Point x = grid.boundary_position(b);
        const std::string id = std::to_string(b), xs = format_number(x.x), ys = format_number(x.y);
        for (int n = 0; n < levels; ++n) {
            const cplx v = trace.values(b, n);
            put(out, {id, xs, ys, format_number(trace.times.time(n)), format_number(v.real()),
                      format_number(v.imag())});
        }
    }
    return out;
}

void write_trace_csv(const fs::path& path, const SpatialGrid& grid, const SpaceTimeTrace& trace) {
    write_file_atomic(path, trace_csv(grid, trace));
}

SpaceTimeTrace parse_trace_csv(const std::string& text, const std::string& source) {
    const Table t = parse_table(text, "node_id,x,y,t,re,im", source);
    const auto rows = t.rows.size();
    if (rows == 0) throw FormatError(source + ": no data rows");
    std::size_t levels = 0;
    while (levels < rows && t.rows[levels][0] == 0.0) ++levels;
    if (levels < 2) throw FormatError(source + ": node 0 has fewer than 2 time levels");
    if (rows % levels != 0)
        throw FormatError(source + ": " + std::to_string(rows) + " rows is not a whole number of nodes at " +
                          std::to_string(levels) + " time levels each (truncated file?)");
    const auto nb = static_cast<int>(rows / levels);
    if (nb % 4 != 0 || nb / 4 + 2 < 5)
        throw FormatError(source + ": " + std::to_string(nb) + " boundary nodes does not match a square grid");
    const int n = nb / 4 + 2;

    const double T = t.rows[levels - 1][3];
    if (!(T > 0.0) || t.rows[0][3] != 0.0) throw FormatError(source + ": times must run from 0 to T > 0");
    UniformTimeGrid times{T / static_cast<double>(levels - 1), static_cast<int>(levels - 1)};

    const double R = -t.rows[0][2];
    if (!(R > 0.0)) throw FormatError(source + ": node 0 is not on the bottom edge");
    const SpatialGrid grid(R, n);

    SpaceTimeTrace trace{grid.descriptor(), times, Eigen::MatrixXcd(nb, static_cast<Eigen::Index>(levels)), 0.0, 0};
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = t.rows[r];
        const int b = static_cast<int>(r / levels);
        const int k = static_cast<int>(r % levels);
        const std::string where = source + ":" + std::to_string(r + 2);
        if (as_index(row[0], where) != b) throw FormatError(where + ": expected node_id " + std::to_string(b));
        const Point x = grid.boundary_position(b);
        if (!close(row[1], x.x, R) || !close(row[2], x.y, R))
            throw FormatError(where + ": node position does not match the boundary ordering");
        if (!close(row[3], times.time(k), T)) throw FormatError(where + ": time levels are not uniform");
        trace.values(b, k) = {row[4], row[5]};
    }
    return trace;
}

SpaceTimeTrace read_trace_csv(const fs::path& path) { return parse_trace_csv(read_file(path), path.string()); }

std::string modal_csv(const SpatialGrid& grid, const ModalField& u) {
    require(u.n_nodes() == grid.n_interior(), "modal field does not match the grid");
    std::string out = "mode,x,y,re,im\n";
    for (int m = 0; m < u.mode_count(); ++m) {
        const std::string ms = std::to_string(m);
        for (int k = 0; k < grid.n_interior(); ++k) {
            const Point x = grid.interior_position(k);
            const cplx v = u.coeffs(k, m);
            put(out, {ms, format_number(x.x), format_number(x.y), format_number(v.real()), format_number(v.imag())});
        }
    }
    return out;
}

void write_modal_csv(const fs::path& path, const SpatialGrid& grid, const ModalField& u) {
    write_file_atomic(path, modal_csv(grid, u));
}

ModalField parse_modal_csv(const std::string& text, const SpatialGrid& grid, const std::string& source) {
    const Table t = parse_table(text, "mode,x,y,re,im", source);
    const auto ni = static_cast<std::size_t>(grid.n_interior());
    if (t.rows.empty() || t.rows.size() % ni != 0)
        throw FormatError(source + ": " + std::to_string(t.rows.size()) + " rows is not a multiple of " +
                          std::to_string(ni) + " interior nodes");
    const int modes = static_cast<int>(t.rows.size() / ni);
    ModalField u = ModalField::zero(grid.n_interior(), modes);
    const double R = grid.half_width();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const int m = static_cast<int>(r / ni), k = static_cast<int>(r % ni);
        const std::string where = source + ":" + std::to_string(r + 2);
        if (as_index(row[0], where) != m) throw FormatError(where + ": expected mode " + std::to_string(m));
        const Point x = grid.interior_position(k);
        if (!close(row[1], x.x, R) || !close(row[2], x.y, R))
            throw FormatError(where + ": node position does not match the grid");
        u.coeffs(k, m) = {row[3], row[4]};
    }
    return u;
}

ModalField read_modal_csv(const fs::path& path, const SpatialGrid& grid) {
    return parse_modal_csv(read_file(path), grid, path.string());
}

std::string metrics_csv(const std::vector<IterationRecord>& history) {
    std::string out = "iter,rel_change,residual,ls_iterations,ls_residual\n";
    for (const auto& r : history)
        put(out, {std::to_string(r.index), format_number(r.rel_change), format_number(r.residual),
                  std::to_string(r.ls_iterations), format_number(r.ls_residual)});
    return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<IterationRecord>& history) {
    write_file_atomic(path, metrics_csv(history));
}

std::vector<IterationRecord> parse_metrics_csv(const std::string& text, const std::string& source) {
    const Table t = parse_table(text, "iter,rel_change,residual,ls_iterations,ls_residual", source);
    std::vector<IterationRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = source + ":" + std::to_string(r + 2);
        out.push_back({as_index(row[0], where), row[1], row[2], as_index(row[3], where), row[4]});
    }
    return out;
}

std::vector<IterationRecord> read_metrics_csv(const fs::path& path) {
    return parse_metrics_csv(read_file(path), path.string());
}

}  // namespace nlsrecon
