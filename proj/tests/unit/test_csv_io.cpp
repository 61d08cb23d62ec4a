#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nlsrecon/csv_io.hpp"
#include "unit/oracles.hpp"

using namespace nlsrecon;

namespace {

SpaceTimeTrace random_trace(const SpatialGrid& g, double T, double dt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    const UniformTimeGrid times = make_time_grid(T, dt);
    SpaceTimeTrace tr{g.descriptor(), times, Eigen::MatrixXcd(g.n_boundary(), times.n_levels()), 0.0, 0};
    for (Eigen::Index i = 0; i < tr.values.size(); ++i) tr.values.data()[i] = {d(rng) * 1e-3, d(rng) * 1e5};
    return tr;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::size_t a = 0;
    while (a < s.size()) {
        const auto b = s.find('\n', a);
        out.push_back(s.substr(a, b - a));
        a = b + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("format_number") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.5) == "-2.5");
    CHECK(format_number(1e-300) == "1e-300");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 40 - 20);
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK_THROWS_AS(format_number(std::numeric_limits<double>::quiet_NaN()), FormatError);
    CHECK_THROWS_AS(format_number(std::numeric_limits<double>::infinity()), FormatError);
}

TEST_CASE("grid CSV") {
    const SpatialGrid g = build_grid(1.0, 7);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-1, 1);
    Eigen::VectorXcd f(49);
    for (auto& v : f) v = {d(rng), d(rng) / 3.0};
    const std::string text = grid_csv(g, f);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() == 50);
    CHECK(lines[0] == "x,y,re,im");
    CHECK(lines[1].rfind("-1,-1,", 0) == 0);
    CHECK(lines[2].rfind("-0.6666666666666667,-1,", 0) == 0);  // x varies fastest
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.back() == '\n');

    const GridCsv back = parse_grid_csv(text);
    CHECK(back.grid == g.descriptor());
    CHECK(back.values == f);
    CHECK(grid_csv(g, back.values) == text);

    // CRLF input is accepted.
    std::string crlf;
    for (const auto& l : lines) crlf += l + "\r\n";
    CHECK(parse_grid_csv(crlf).values == f);

    CHECK(error_of([&] { parse_grid_csv("x,y,re\n"); }).find("expected header") != std::string::npos);
    CHECK(error_of([&] { parse_grid_csv(text.substr(0, text.rfind('\n', text.size() - 2) + 1)); })
              .find("not a square grid") != std::string::npos);
    std::string swapped = text;
    const auto l1 = lines[1], l2 = lines[2];
    swapped.replace(swapped.find(l1), l1.size(), l2);
    CHECK_THROWS_AS(parse_grid_csv(swapped), FormatError);
    CHECK_THROWS_AS(parse_grid_csv(""), FormatError);
    std::string bad = text;
    bad.replace(bad.find(lines[3]), lines[3].size(), "1,2,3");
    CHECK(error_of([&] { parse_grid_csv(bad); }).find(":4: expected 4 fields") != std::string::npos);
    bad = text;
    bad.replace(bad.find(lines[3]), lines[3].size(), "0,-1,abc,0");
    CHECK(error_of([&] { parse_grid_csv(bad); }).find("malformed number 'abc'") != std::string::npos);
}

TEST_CASE("trace CSV") {
    const SpatialGrid g = build_grid(1.5, 9);
    const SpaceTimeTrace tr = random_trace(g, 0.2, 0.01, 3);
    const std::string text = trace_csv(g, tr);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() == 1 + 28 * 21);
    CHECK(lines[0] == "node_id,x,y,t,re,im");
    CHECK(lines[1].rfind("0,-1.125,-1.5,0,", 0) == 0);
    CHECK(lines[2].rfind("0,-1.125,-1.5,0.01,", 0) == 0);  // time fastest
    CHECK(lines[22].rfind("1,", 0) == 0);

    const SpaceTimeTrace back = parse_trace_csv(text);
    CHECK(back.grid == g.descriptor());
    CHECK(back.times.n_steps == 20);
    CHECK(back.times.dt == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(back.values == tr.values);
    CHECK(trace_csv(g, back) == text);

    SUBCASE("truncation") {
        // Drop the last line: the row count no longer fits whole nodes.
        const std::string cut = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
        CHECK(error_of([&] { parse_trace_csv(cut); }).find("truncated") != std::string::npos);
        // Drop a whole node: the remaining layout is not a square grid.
        std::string no_node;
        for (std::size_t i = 0; i < lines.size() - 21; ++i) no_node += lines[i] + "\n";
        CHECK_THROWS_AS(parse_trace_csv(no_node), FormatError);
        CHECK_THROWS_AS(parse_trace_csv("node_id,x,y,t,re,im\n"), FormatError);
    }
    SUBCASE("reordered rows") {
        std::string r;
        for (std::size_t i = 0; i < lines.size(); ++i) r += lines[i == 30 ? 31 : i == 31 ? 30 : i] + "\n";
        CHECK_THROWS_AS(parse_trace_csv(r), FormatError);
    }
    SUBCASE("wrong header") {
        CHECK(error_of([&] { parse_trace_csv("node,x,y,t,re,im\n" + text.substr(text.find('\n') + 1)); })
                  .find("expected header 'node_id,x,y,t,re,im'") != std::string::npos);
    }
    SUBCASE("file round trip") {
        const auto dir = oracle::scratch_dir("csv_trace");
        const auto path = dir / "sub" / "trace.csv";
        write_trace_csv(path, g, tr);
        CHECK(read_file(path) == text);
        CHECK_FALSE(std::filesystem::exists(dir / "sub" / "trace.csv.tmp"));
        CHECK(read_trace_csv(path).values == tr.values);
        CHECK_THROWS_AS(read_trace_csv(dir / "nope.csv"), FormatError);
    }
    SUBCASE("non-finite values are refused") {
        SpaceTimeTrace bad = tr;
        bad.values(3, 4) = {std::nan(""), 0.0};
        CHECK_THROWS_AS(trace_csv(g, bad), FormatError);
    }
}

TEST_CASE("modal and metrics CSV") {
    const SpatialGrid g = build_grid(1.0, 7);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1, 1);
    ModalField u = ModalField::zero(g.n_interior(), 3);
    for (Eigen::Index i = 0; i < u.coeffs.size(); ++i) u.coeffs.data()[i] = {d(rng), d(rng)};
    const std::string text = modal_csv(g, u);
    CHECK(lines_of(text).size() == 1 + 3 * 25);
    CHECK(lines_of(text)[0] == "mode,x,y,re,im");
    CHECK(parse_modal_csv(text, g).coeffs == u.coeffs);
    CHECK_THROWS_AS(parse_modal_csv(text, build_grid(1.0, 9)), FormatError);

    std::vector<IterationRecord> h{{0, 1.0, 0.5, 12, 1e-9}, {1, 0.125, 0.0625, 0, 0.0}};
    const std::string m = metrics_csv(h);
    CHECK(m == "iter,rel_change,residual,ls_iterations,ls_residual\n0,1,0.5,12,1e-09\n1,0.125,0.0625,0,0\n");
    const auto back = parse_metrics_csv(m);
    REQUIRE(back.size() == 2);
    CHECK(back[1].rel_change == 0.125);
    CHECK(back[0].ls_iterations == 12);
    CHECK_THROWS_AS(parse_metrics_csv("iter,rel_change,residual,ls_iterations,ls_residual\n0.5,1,1,1,1\n"),
                    FormatError);
}

TEST_CASE("atomic write") {
    const auto dir = oracle::scratch_dir("csv_atomic");
    const auto path = dir / "a" / "b" / "file.txt";
    write_file_atomic(path, "one\n");
    write_file_atomic(path, "two\n");
    CHECK(read_file(path) == "two\n");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(path.parent_path())) ++entries;
    CHECK(entries == 1);
    // Target is a directory: rename fails, the temp file is cleaned up.
    std::filesystem::create_directories(dir / "blocked");
    std::filesystem::create_directories(dir / "blocked" / "inner");
    CHECK_THROWS_AS(write_file_atomic(dir / "blocked", "x"), FormatError);
    CHECK_FALSE(std::filesystem::exists(dir / "blocked.tmp"));
}
