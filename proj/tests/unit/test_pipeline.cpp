#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "nlsrecon/csv_io.hpp"
#include "nlsrecon/pipeline.hpp"
#include "unit/oracles.hpp"

using namespace nlsrecon;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
    const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + NLSRECON_CLI_PATH + "\" " + args + " >\"" +
                            o.string() + "\" 2>\"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(o), read_file(e)};
}

fs::path write_config(const fs::path& dir, const std::string& extra = "") {
    const fs::path p = dir / "tiny.cfg";
    std::ofstream(p) << "name = tiny\n"
                     << "output_dir = " << (dir / "out").string() << "\n"
                     << "nx = 11\ndt = 0.01\nT = 0.2\np = 2\n"
                     << "phantom = test1\nnoise_delta = 0.1\nseed = 42\n"
                     << "n_modes = 4\nk_max = 3\ndiag_n_list = 1, 2, 4\n"
                     << extra;
    return p;
}

std::string cfg_arg(const fs::path& p) { return "--config \"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli: forward") {
    const auto dir = oracle::scratch_dir("cli_forward");
    const auto cfg = write_config(dir);
    const Run r = cli(dir, "forward " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "out" / "tiny_trace_clean.csv"));
    CHECK(fs::exists(dir / "out" / "tiny_trace_noisy.csv"));
    const SpaceTimeTrace clean = read_trace_csv(dir / "out" / "tiny_trace_clean.csv");
    const SpaceTimeTrace noisy = read_trace_csv(dir / "out" / "tiny_trace_noisy.csv");
    CHECK(clean.values.rows() == 36);
    CHECK(clean.values.cols() == 21);
    CHECK(clean.values.norm() > 0.0);
    CHECK((noisy.values - clean.values).norm() > 0.0);
    CHECK((noisy.values - clean.values).cwiseAbs().maxCoeff() <= 0.1 * clean.values.cwiseAbs().maxCoeff() + 1e-15);

    SUBCASE("no noise: clean trace only") {
        const auto d2 = oracle::scratch_dir("cli_forward_clean");
        const Run r2 = cli(d2, "forward " + cfg_arg(write_config(d2)) + " --set noise_delta=0", "NLSRECON_OUTPUT_DIR=");
        REQUIRE(r2.code == 0);
        CHECK(fs::exists(d2 / "out" / "tiny_trace_clean.csv"));
        CHECK_FALSE(fs::exists(d2 / "out" / "tiny_trace_noisy.csv"));
        CHECK(read_file(d2 / "out" / "tiny_trace_clean.csv") == read_file(dir / "out" / "tiny_trace_clean.csv"));
    }
    SUBCASE("output directory from the environment") {
        const Run r3 = cli(dir, "forward " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=\"" + (dir / "env_out").string() + "\"");
        REQUIRE(r3.code == 0);
        CHECK(fs::exists(dir / "env_out" / "tiny_trace_clean.csv"));
    }
}

TEST_CASE("cli: usage and config errors") {
    const auto dir = oracle::scratch_dir("cli_errors");
    const fs::path bad = dir / "bad.cfg";
    std::ofstream(bad) << "nx = 11\nT = 0.2\np = 2\n";
    const Run r = cli(dir, "forward " + cfg_arg(bad));
    CHECK(r.code == 2);
    CHECK(r.err.find("missing required key 'dt'") != std::string::npos);

    const Run r2 = cli(dir, "invert " + cfg_arg(write_config(dir)) + " --set lamda=3");
    CHECK(r2.code == 2);
    CHECK(r2.err.find("unknown key 'lamda'") != std::string::npos);

    CHECK(cli(dir, "").code != 0);
    CHECK(cli(dir, "frobnicate").code != 0);
    CHECK(cli(dir, "forward --config \"" + (dir / "absent.cfg").string() + "\"").code != 0);
    CHECK(cli(dir, "--help").code == 0);
}

TEST_CASE("cli: invert") {
    const auto dir = oracle::scratch_dir("cli_invert");
    const auto cfg = write_config(dir);
    REQUIRE(cli(dir, "forward " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=").code == 0);
    const Run r = cli(dir, "invert " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=");
    REQUIRE(r.code == 0);
    const fs::path out = dir / "out";
    for (const char* f : {"tiny_metrics.csv", "tiny_modal.csv", "tiny_u0.csv", "tiny_summary.txt"})
        CHECK(fs::exists(out / f));
    const auto metrics = read_metrics_csv(out / "tiny_metrics.csv");
    REQUIRE(metrics.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(metrics[static_cast<std::size_t>(k)].index == k);
    // One progress line per iteration on stdout.
    int lines = 0;
    for (char c : r.out) lines += c == '\n';
    CHECK(lines >= 3);

    const GridCsv u0 = read_grid_csv(out / "tiny_u0.csv");
    CHECK(u0.grid.n_per_side == 11);
    const ModalField modal = read_modal_csv(out / "tiny_modal.csv", build_grid(u0.grid));
    CHECK(modal.mode_count() == 5);
    const std::string summary = read_file(out / "tiny_summary.txt");
    CHECK(summary.find("name: tiny\n") == 0);
    CHECK(summary.find("iterations: 3\n") != std::string::npos);
    CHECK(summary.find("noise: delta=0.1 seed=42\n") != std::string::npos);
    CHECK(summary.find("least_squares: direct") != std::string::npos);
    CHECK(summary.find("rel_error_re: ") != std::string::npos);

    SUBCASE("rerun is byte identical") {
        const std::string m1 = read_file(out / "tiny_metrics.csv"), s1 = summary, g1 = read_file(out / "tiny_u0.csv");
        REQUIRE(cli(dir, "invert --quiet " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=").code == 0);
        CHECK(read_file(out / "tiny_metrics.csv") == m1);
        CHECK(read_file(out / "tiny_summary.txt") == s1);
        CHECK(read_file(out / "tiny_u0.csv") == g1);
    }
    SUBCASE("truncated trace") {
        const std::string t = read_file(out / "tiny_trace_noisy.csv");
        const fs::path cut = dir / "cut.csv";
        std::ofstream(cut, std::ios::binary) << t.substr(0, t.size() - 40);
        const Run bad = cli(dir, "invert " + cfg_arg(cfg) + " --trace \"" + cut.string() + "\"", "NLSRECON_OUTPUT_DIR=");
        CHECK(bad.code == 2);
        CHECK(bad.err.find("cut.csv") != std::string::npos);
    }
    SUBCASE("trace from a different grid") {
        const Run bad = cli(dir, "invert " + cfg_arg(cfg) + " --set nx=13", "NLSRECON_OUTPUT_DIR=");
        CHECK(bad.code != 0);
        CHECK(bad.err.find("grid") != std::string::npos);
    }
    SUBCASE("missing trace") {
        CHECK(cli(dir, "invert " + cfg_arg(cfg) + " --set name=other", "NLSRECON_OUTPUT_DIR=").code == 2);
    }
}

TEST_CASE("cli: diagnose and phantom") {
    const auto dir = oracle::scratch_dir("cli_diagnose");
    const auto cfg = write_config(dir);
    REQUIRE(cli(dir, "diagnose " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=").code == 0);
    const fs::path out = dir / "out";
    for (const char* f : {"tiny_basis.csv", "tiny_carleman.csv", "tiny_truncation.csv", "tiny_diagnose.txt"})
        CHECK(fs::exists(out / f));
    const std::string basis = read_file(out / "tiny_basis.csv");
    CHECK(basis.rfind("node_index,t,weight,psi_0,psi_1,psi_2,psi_3,psi_4\n", 0) == 0);

    std::ifstream s(out / "tiny_diagnose.txt");
    double gram = -1.0;
    int ratios = 0;
    std::vector<double> tails;
    for (std::string line; std::getline(s, line);) {
        if (line.rfind("gram_deviation: ", 0) == 0) gram = std::stod(line.substr(16));
        if (line.rfind("carleman_ratio", 0) == 0 && std::stod(line.substr(line.find(": ") + 2)) > 0.0) ++ratios;
        if (line.rfind("truncation_tail", 0) == 0) tails.push_back(std::stod(line.substr(line.find(": ") + 2)));
    }
    CHECK(gram >= 0.0);
    CHECK(gram < 1e-9);
    CHECK(ratios == 3);
    REQUIRE(tails.size() == 3);
    CHECK(tails[1] < tails[0]);
    CHECK(tails[2] < tails[1]);

    SUBCASE("with a trace") {
        REQUIRE(cli(dir, "forward " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=").code == 0);
        const Run r = cli(dir,
                          "diagnose " + cfg_arg(cfg) + " --trace \"" + (out / "tiny_trace_clean.csv").string() + "\"",
                          "NLSRECON_OUTPUT_DIR=");
        CHECK(r.code == 0);
        CHECK(read_file(out / "tiny_diagnose.txt").find("truncation signal: ") != std::string::npos);
    }
    SUBCASE("phantom") {
        REQUIRE(cli(dir, "phantom " + cfg_arg(cfg), "NLSRECON_OUTPUT_DIR=").code == 0);
        const GridCsv ph = read_grid_csv(out / "tiny_phantom.csv");
        const SpatialGrid g = build_grid(ph.grid);
        CHECK((ph.values - rasterize_phantom_full(g, Phantom::test1())).norm() == 0.0);
    }
}

TEST_CASE("pipeline: in-process invert checks inputs") {
    unsetenv(kOutputDirEnv);
    const auto dir = oracle::scratch_dir("pipeline_inproc");
    PipelineConfig c = load_pipeline_config(write_config(dir), {"noise_delta=0"});
    const ForwardOutputs f = forward_traces(c);
    CHECK_FALSE(f.noisy);
    CHECK(default_trace_path(c).filename() == "tiny_trace_clean.csv");
    c.noise_delta = 0.1;
    CHECK(default_trace_path(c).filename() == "tiny_trace_noisy.csv");

    const InvertOutputs inv = invert_trace(c, f.clean);
    CHECK(inv.report.history.size() == 3);
    REQUIRE(inv.centroid_re);
    REQUIRE(inv.truth_centroid_im);

    PipelineConfig longer = c;
    longer.horizon = 0.3;
    CHECK_THROWS(invert_trace(longer, f.clean));
    PipelineConfig other_grid = c;
    other_grid.nx = 13;
    CHECK_THROWS(invert_trace(other_grid, f.clean));
}
