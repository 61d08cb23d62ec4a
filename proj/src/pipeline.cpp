#include "nlsrecon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlsrecon/csv_io.hpp"

namespace nlsrecon {

namespace fs = std::filesystem;

namespace {

fs::path out_file(const PipelineConfig& cfg, const std::string& suffix) {
    return cfg.output_dir / (cfg.name + suffix);
}

RealField q_field(const PipelineConfig& cfg, const SpatialGrid& grid) {
    return RealField::Constant(grid.n_interior(), cfg.q);
}

std::string pt(Point p) { return format_number(p.x) + " " + format_number(p.y); }

bool has_component(const Eigen::VectorXcd& f, Component c) {
    for (Eigen::Index k = 0; k < f.size(); ++k)
        if ((c == Component::Real ? f[k].real() : f[k].imag()) != 0.0) return true;
    return false;
}

}  // namespace

TimeBasis basis_for(const PipelineConfig& cfg) {
    const int N = cfg.inversion.n_modes;
    return build_basis(cfg.horizon, N, cfg.n_quad > 0 ? cfg.n_quad : default_quad_nodes(N));
}

ForwardOutputs forward_traces(const PipelineConfig& cfg) {
    const SpatialGrid grid(cfg.half_width, cfg.nx);
    ForwardOutputs out;
    out.clean = run_forward(grid, cfg.phantom, cfg.horizon, cfg.dt, cfg.p, q_field(cfg, grid));
    if (cfg.noise_delta > 0.0) out.noisy = add_noise(out.clean, cfg.noise_delta, cfg.seed);
    return out;
}

ForwardOutputs cmd_forward(const PipelineConfig& cfg) {
    const SpatialGrid grid(cfg.half_width, cfg.nx);
    ForwardOutputs out = forward_traces(cfg);
    out.clean_path = out_file(cfg, "_trace_clean.csv");
    write_trace_csv(out.clean_path, grid, out.clean);
    if (out.noisy) {
        out.noisy_path = out_file(cfg, "_trace_noisy.csv");
        write_trace_csv(*out.noisy_path, grid, *out.noisy);
    }
    return out;
}

fs::path default_trace_path(const PipelineConfig& cfg) {
    return out_file(cfg, cfg.noise_delta > 0.0 ? "_trace_noisy.csv" : "_trace_clean.csv");
}

InvertOutputs invert_trace(const PipelineConfig& cfg, const SpaceTimeTrace& trace, const PicardOptions& options) {
    const SpatialGrid grid(cfg.half_width, cfg.nx);
    const GridDescriptor d = trace.grid;
    if (d.n_per_side != cfg.nx || std::abs(d.half_width - cfg.half_width) > 1e-12 * cfg.half_width)
        throw InvalidArgument("trace grid (nx=" + std::to_string(d.n_per_side) + ", R=" + format_number(d.half_width) +
                              ") does not match the config grid (nx=" + std::to_string(cfg.nx) +
                              ", R=" + format_number(cfg.half_width) + ")");
    const UniformTimeGrid expected = make_time_grid(cfg.horizon, cfg.dt);
    if (trace.times.n_steps != expected.n_steps ||
        std::abs(trace.times.horizon() - cfg.horizon) > 1e-9 * cfg.horizon)
        throw InvalidArgument("trace time grid (" + std::to_string(trace.times.n_levels()) + " levels to T=" +
                              format_number(trace.times.horizon()) + ") does not match the config (" +
                              std::to_string(expected.n_levels()) + " levels to T=" + format_number(cfg.horizon) +
                              ")");

    const InversionConfig& inv = cfg.inversion;
    const TimeBasis basis = basis_for(cfg);
    const CarlemanWeight weight = build_weight(grid, inv.focus, inv.lambda, inv.beta);
    const ModalBoundaryData data = project_trace(basis, trace);

    PicardOptions opts = options;
    std::optional<Eigen::VectorXcd> truth;
    if (cfg.has_truth()) {
        truth = rasterize_phantom_full(grid, cfg.phantom);
        if (!opts.truth_full) opts.truth_full = truth;
    }

    InvertOutputs out;
    out.report = picard_solve(grid, basis, weight, data, inv, cfg.p, q_field(cfg, grid), opts);
    const ReconstructionReport& r = out.report;

    if (truth) {
        if (has_component(*truth, Component::Real)) {
            out.truth_centroid_re = inclusion_centroid(grid, *truth, Component::Real);
            if (has_component(r.u0_field, Component::Real))
                out.centroid_re = inclusion_centroid(grid, r.u0_field, Component::Real);
        }
        if (has_component(*truth, Component::Imag)) {
            out.truth_centroid_im = inclusion_centroid(grid, *truth, Component::Imag);
            if (has_component(r.u0_field, Component::Imag))
                out.centroid_im = inclusion_centroid(grid, r.u0_field, Component::Imag);
        }
    }

    const int N = inv.n_modes;
    const bool direct = inv.ls_method == LsMethod::Direct ||
                        (inv.ls_method == LsMethod::Auto && (N + 1) * grid.n_interior() <= inv.direct_limit);
    std::ostringstream s;
    s << "name: " << cfg.name << '\n'
      << "grid: nx=" << cfg.nx << " R=" << format_number(cfg.half_width) << " h=" << format_number(grid.spacing())
      << '\n'
      << "time: T=" << format_number(cfg.horizon) << " dt=" << format_number(expected.dt)
      << " levels=" << expected.n_levels() << '\n'
      << "model: p=" << format_number(cfg.p) << " q=" << format_number(cfg.q) << '\n'
      << "basis: N=" << N << " n_quad=" << basis.n_quad() << '\n'
      << "weight: lambda=" << format_number(inv.lambda) << " beta=" << format_number(inv.beta)
      << " focus=" << pt(inv.focus) << '\n'
      << "regularization: epsilon=" << format_number(inv.epsilon) << " w0=" << format_number(inv.reg.w0)
      << " w1=" << format_number(inv.reg.w1) << " w2=" << format_number(inv.reg.w2) << '\n'
      << "least_squares: " << (direct ? "direct" : "iterative") << " unknowns=" << (N + 1) * grid.n_interior()
      << '\n'
      << "noise: delta=" << format_number(cfg.noise_delta) << " seed=" << cfg.seed << '\n'
      << "iterations: " << r.history.size() << '\n';
    if (!r.history.empty())
        s << "final_rel_change: " << format_number(r.history.back().rel_change) << '\n'
          << "final_residual: " << format_number(r.history.back().residual) << '\n';
    s << "max_abs_re: " << format_number(r.amplitude.max_abs_re) << '\n'
      << "max_abs_im: " << format_number(r.amplitude.max_abs_im) << '\n';
    if (r.amplitude.rel_error_re) s << "rel_error_re: " << format_number(*r.amplitude.rel_error_re) << '\n';
    if (r.amplitude.rel_error_im) s << "rel_error_im: " << format_number(*r.amplitude.rel_error_im) << '\n';
    if (out.truth_centroid_re)
        s << "centroid_re: " << (out.centroid_re ? pt(*out.centroid_re) : "none") << " truth "
          << pt(*out.truth_centroid_re) << '\n';
    if (out.truth_centroid_im)
        s << "centroid_im: " << (out.centroid_im ? pt(*out.centroid_im) : "none") << " truth "
          << pt(*out.truth_centroid_im) << '\n';
    s << "admissible_bound_exceeded: " << (r.bound_exceeded ? "yes" : "no") << '\n';
    if (r.warnings.empty()) s << "warnings: none\n";
    for (const auto& w : r.warnings) s << "warning: " << w << '\n';
    out.summary = s.str();
    return out;
}

InvertOutputs cmd_invert(const PipelineConfig& cfg, const fs::path& trace_path, const PicardOptions& options) {
    const SpaceTimeTrace trace = read_trace_csv(trace_path);
    InvertOutputs out = invert_trace(cfg, trace, options);
    const SpatialGrid grid(cfg.half_width, cfg.nx);
    out.metrics_path = out_file(cfg, "_metrics.csv");
    out.modal_path = out_file(cfg, "_modal.csv");
    out.u0_path = out_file(cfg, "_u0.csv");
    out.summary_path = out_file(cfg, "_summary.txt");
    write_metrics_csv(out.metrics_path, out.report.history);
    write_modal_csv(out.modal_path, grid, out.report.final_modal);
    write_grid_csv(out.u0_path, grid, out.report.u0_field);
    write_file_atomic(out.summary_path, out.summary);
    return out;
}

DiagnoseOutputs cmd_diagnose(const PipelineConfig& cfg, const std::optional<fs::path>& trace_path) {
    DiagnoseOutputs out;
    const TimeBasis basis = basis_for(cfg);
    out.gram_deviation = gram_deviation(basis);
    out.s_identity_deviation = s_identity_deviation(basis);

    {
        std::string csv = "node_index,t,weight";
        for (int n = 0; n < basis.mode_count(); ++n) csv += ",psi_" + std::to_string(n);
        csv += '\n';
        for (int j = 0; j < basis.n_quad(); ++j) {
            csv += std::to_string(j) + ',' + format_number(basis.quad_nodes()[j]) + ',' +
                   format_number(basis.weighted_quad_weights()[j]);
            for (int n = 0; n < basis.mode_count(); ++n) csv += ',' + format_number(basis.psi_table()(j, n));
            csv += '\n';
        }
        out.basis_path = out_file(cfg, "_basis.csv");
        write_file_atomic(out.basis_path, csv);
    }

    // Smooth bump of radius 0.6 R about the origin; it vanishes well inside the boundary layers.
    const SpatialGrid grid(cfg.half_width, cfg.nx);
    InteriorField bump(grid.n_interior());
    const double rho = 0.6 * cfg.half_width;
    for (int k = 0; k < grid.n_interior(); ++k) {
        const Point x = grid.interior_position(k);
        const double s = (x.x * x.x + x.y * x.y) / (rho * rho);
        bump[k] = s < 1.0 ? std::pow(1.0 - s, 3) : 0.0;
    }
    {
        std::string csv = "lambda,numerator,denominator,ratio\n";
        for (double lambda : cfg.diag_lambdas) {
            const CarlemanWeight w = build_weight(grid, cfg.inversion.focus, lambda, cfg.inversion.beta);
            const CarlemanRatio r = carleman_diagnostic(grid, w, bump);
            out.carleman.push_back(r);
            csv += format_number(r.lambda) + ',' + format_number(r.numerator) + ',' + format_number(r.denominator) +
                   ',' + format_number(r.ratio) + '\n';
        }
        out.carleman_path = out_file(cfg, "_carleman.csv");
        write_file_atomic(out.carleman_path, csv);
    }

    {
        UniformTimeGrid times;
        Eigen::VectorXcd samples;
        std::string source;
        if (trace_path) {
            const SpaceTimeTrace trace = read_trace_csv(*trace_path);
            Eigen::Index best = 0;
            trace.values.rowwise().squaredNorm().maxCoeff(&best);
            times = trace.times;
            samples = trace.values.row(best).transpose();
            source = "trace node " + std::to_string(best);
        } else {
            times = make_time_grid(cfg.horizon, cfg.dt);
            samples.resize(times.n_levels());
            for (int n = 0; n < times.n_levels(); ++n) samples[n] = std::exp(cplx(0.0, times.time(n)));
            source = "exp(i t)";
        }
        int n_max = basis.n_modes();
        for (int n : cfg.diag_n_list) n_max = std::max(n_max, n);
        const TimeBasis wide = n_max == basis.n_modes() ? basis : build_basis(cfg.horizon, n_max);
        out.truncation = truncation_residual_report(
            wide, std::span<const cplx>(samples.data(), static_cast<std::size_t>(samples.size())), times,
            cfg.diag_n_list);
        std::string csv = "n_modes,tail_norm\n";
        for (const auto& e : out.truncation)
            csv += std::to_string(e.n_modes) + ',' + format_number(e.tail_norm) + '\n';
        out.truncation_path = out_file(cfg, "_truncation.csv");
        write_file_atomic(out.truncation_path, csv);

        std::ostringstream s;
        s << "gram_deviation: " << format_number(out.gram_deviation) << '\n'
          << "s_identity_deviation: " << format_number(out.s_identity_deviation) << '\n'
          << "basis: T=" << format_number(basis.horizon()) << " N=" << basis.n_modes() << " n_quad=" << basis.n_quad()
          << '\n';
        for (const auto& r : out.carleman)
            s << "carleman_ratio lambda=" << format_number(r.lambda) << ": " << format_number(r.ratio) << '\n';
        s << "truncation signal: " << source << '\n';
        for (const auto& e : out.truncation)
            s << "truncation_tail N=" << e.n_modes << ": " << format_number(e.tail_norm) << '\n';
        out.summary = s.str();
    }
    out.summary_path = out_file(cfg, "_diagnose.txt");
    write_file_atomic(out.summary_path, out.summary);
    return out;
}

fs::path cmd_phantom(const PipelineConfig& cfg) {
    const SpatialGrid grid(cfg.half_width, cfg.nx);
    const fs::path path = out_file(cfg, "_phantom.csv");
    write_grid_csv(path, grid, rasterize_phantom_full(grid, cfg.phantom));
    return path;
}

}  // namespace nlsrecon
