#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "nlsrecon/config.hpp"
#include "unit/oracles.hpp"

using namespace nlsrecon;

namespace {

const std::string kBase = "nx = 11\ndt = 0.01\nT = 0.2\np = 2\n";

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_pipeline_config(text, "run.cfg", overrides);
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

struct EnvGuard {
    EnvGuard() { unsetenv(kOutputDirEnv); }
    ~EnvGuard() { unsetenv(kOutputDirEnv); }
};

}  // namespace

TEST_CASE("config: minimal file and defaults") {
    EnvGuard env;
    const PipelineConfig c = parse_pipeline_config(kBase, "run.cfg");
    CHECK(c.nx == 11);
    CHECK(c.dt == 0.01);
    CHECK(c.horizon == 0.2);
    CHECK(c.p == 2.0);
    CHECK(c.q == 1.0);
    CHECK(c.half_width == 1.0);
    CHECK(c.name == "run");
    CHECK(c.output_dir == ".");
    CHECK_FALSE(c.has_truth());
    CHECK(c.inversion.lambda == 20.0);
    CHECK(c.inversion.n_modes == 65);
    CHECK(c.inversion.ls_method == LsMethod::Auto);
    CHECK(c.diag_n_list == std::vector<int>{8, 16, 32, 65});
    CHECK(c.grid().n_per_side == 11);
}

TEST_CASE("config: full key set") {
    EnvGuard env;
    const std::string text = kBase +
                             "# comment line\n"
                             "name = desk   # trailing comment\n"
                             "output_dir = out/a\n"
                             "half_width = 1.5\n"
                             "q = 0.5\n"
                             "phantom = test2\n"
                             "noise_delta = 0.05\n"
                             "seed = 77\n"
                             "lambda = 10\nbeta = 4\nfocus = 0.5, 9\nepsilon = 1e-5\n"
                             "n_modes = 12\nn_quad = 300\nk_max = 3\n"
                             "reg_w0 = 0.1\nreg_w1 = 0.2\nreg_w2 = 0.3\n"
                             "ls_tol = 1e-9\nls_max_iter = 500\nls_method = iterative\ndirect_limit = 1000\n"
                             "admissible_bound = 7\n"
                             "diag_lambdas = 5, 6\ndiag_n_list = 1,2,3\n"
                             "\n   \n";
    const PipelineConfig c = parse_pipeline_config(text, "run.cfg");
    CHECK(c.name == "desk");
    CHECK(c.output_dir == "out/a");
    CHECK(c.half_width == 1.5);
    CHECK(c.q == 0.5);
    CHECK(c.phantom_preset == "test2");
    CHECK(c.phantom.parts.size() == Phantom::test2().parts.size());
    CHECK(c.noise_delta == 0.05);
    CHECK(c.seed == 77);
    CHECK(c.inversion.seed == 77);
    CHECK(c.inversion.lambda == 10.0);
    CHECK(c.inversion.beta == 4.0);
    CHECK(c.inversion.focus.x == 0.5);
    CHECK(c.inversion.focus.y == 9.0);
    CHECK(c.inversion.epsilon == 1e-5);
    CHECK(c.inversion.n_modes == 12);
    CHECK(c.n_quad == 300);
    CHECK(c.inversion.k_max == 3);
    CHECK(c.inversion.reg.w2 == 0.3);
    CHECK(c.inversion.ls_tol == 1e-9);
    CHECK(c.inversion.ls_max_iter == 500);
    CHECK(c.inversion.ls_method == LsMethod::Iterative);
    CHECK(c.inversion.direct_limit == 1000);
    CHECK(c.inversion.admissible_bound == 7.0);
    CHECK(c.diag_lambdas == std::vector<double>{5.0, 6.0});
    CHECK(c.diag_n_list == std::vector<int>{1, 2, 3});
}

TEST_CASE("config: errors name the key and line") {
    EnvGuard env;
    CHECK(error_of("nx = 11\nT = 0.2\np = 2\n") == "run.cfg: missing required key 'dt'");
    const std::string unknown = error_of(kBase + "lamda = 3\n");
    CHECK(unknown.find("run.cfg:5") != std::string::npos);
    CHECK(unknown.find("unknown key 'lamda'") != std::string::npos);
    CHECK(error_of(kBase + "nx = 13\n").find("run.cfg:5: key 'nx' given twice") != std::string::npos);
    CHECK(error_of(kBase + "just words\n").find("run.cfg:5: expected 'key = value'") != std::string::npos);
    CHECK(error_of(kBase + "lambda = big\n").find("run.cfg:5: lambda: expected a number") != std::string::npos);
    CHECK(error_of(kBase + "nx2 = 1\n").find("unknown key") != std::string::npos);
    CHECK(error_of(kBase + "k_max = 2.5\n").find("expected an integer") != std::string::npos);
    CHECK(error_of(kBase + "phantom = test9\n").find("unknown phantom preset") != std::string::npos);
    CHECK(error_of(kBase + "ls_method = qr\n").find("ls_method") != std::string::npos);
    CHECK(error_of(kBase + "focus = 1\n").find("focus needs") != std::string::npos);
    CHECK(error_of(kBase + "seed = -1\n").find("nonnegative") != std::string::npos);
    CHECK(error_of("nx = 11\ndt = 0.03\nT = 0.2\np = 2\n").find("run.cfg:") == 0);  // T/dt not integral
    CHECK(error_of("nx = 3\ndt = 0.01\nT = 0.2\np = 2\n").find("nx must be at least 5") != std::string::npos);
    CHECK(error_of("nx = 11\ndt = 0.01\nT = 0.2\np = 1\n").find("p must exceed 1") != std::string::npos);
    CHECK(error_of(kBase + "diag_lambdas = 5,\n").find("expected a number") != std::string::npos);
    CHECK(error_of(kBase + "n_quad = 10\n").find("n_quad") != std::string::npos);
    CHECK(error_of(kBase + "name = a/b\n").find("name") != std::string::npos);
    CHECK(error_of(kBase + "epsilon = 0\n").find("epsilon must be positive") != std::string::npos);
    CHECK(error_of(kBase + "q = 1e-3x\n").find("expected a number") != std::string::npos);
}

TEST_CASE("config: --set overrides") {
    EnvGuard env;
    const PipelineConfig c = parse_pipeline_config(kBase + "lambda = 5\n", "run.cfg", {"lambda=7", "k_max = 2"});
    CHECK(c.inversion.lambda == 7.0);
    CHECK(c.inversion.k_max == 2);
    // Required keys may come from overrides alone.
    CHECK(parse_pipeline_config("nx = 11\nT = 0.2\np = 2\n", "run.cfg", {"dt=0.01"}).dt == 0.01);
    CHECK(error_of(kBase, {"lambda"}).find("expected key=value") != std::string::npos);
    CHECK(error_of(kBase, {"bogus=1"}) == "--set: unknown key 'bogus'");
}

TEST_CASE("config: output directory from the environment") {
    EnvGuard env;
    setenv(kOutputDirEnv, "/tmp/from_env", 1);
    CHECK(parse_pipeline_config(kBase + "output_dir = here\n", "run.cfg").output_dir == "/tmp/from_env");
    setenv(kOutputDirEnv, "", 1);
    CHECK(parse_pipeline_config(kBase + "output_dir = here\n", "run.cfg").output_dir == "here");
}

TEST_CASE("config: inclusions") {
    EnvGuard env;
    const Inclusion a = parse_inclusion("im -0.5 disk 0.1 0.2 0.3");
    CHECK(a.target == Component::Imag);
    CHECK(a.amplitude == -0.5);
    REQUIRE(a.shapes.size() == 1);
    const auto& d = std::get<Disk>(a.shapes[0]);
    CHECK(d.cx == 0.1);
    CHECK(d.radius == 0.3);

    const Inclusion u = parse_inclusion("re 1 rect -0.5 -0.4 -0.5 0.5 ; strip 1 0 0.1 -0.5 0.5 -0.5 0.5; annulus 0 0 0.2 0.4");
    REQUIRE(u.shapes.size() == 3);
    CHECK(std::holds_alternative<AxisRect>(u.shapes[0]));
    CHECK(std::get<SlantedStrip>(u.shapes[1]).box.y_max == 0.5);
    CHECK(std::holds_alternative<Annulus>(u.shapes[2]));
    CHECK(std::holds_alternative<SquareRing>(parse_inclusion("re 1 square_ring 0 0 0.5 0.3").shapes[0]));

    CHECK_THROWS_AS(parse_inclusion("re 1 disk 0 0"), FormatError);
    CHECK_THROWS_AS(parse_inclusion("xx 1 disk 0 0 1"), FormatError);
    CHECK_THROWS_AS(parse_inclusion("re 1 blob 0 0 1"), FormatError);
    CHECK_THROWS_AS(parse_inclusion("re 1"), FormatError);
    CHECK_THROWS_AS(parse_inclusion("re 1 disk 0 0 1 ;"), FormatError);

    // Preset parts come first, explicit inclusions are appended in order.
    const PipelineConfig c = parse_pipeline_config(
        kBase + "phantom = test1\ninclusion = re 2 disk 0 0 0.1\ninclusion = im 3 disk 0 0 0.1\n", "run.cfg");
    const std::size_t base = Phantom::test1().parts.size();
    REQUIRE(c.phantom.parts.size() == base + 2);
    CHECK(c.phantom.parts[base].amplitude == 2.0);
    CHECK(c.phantom.parts[base + 1].target == Component::Imag);
    CHECK(c.has_truth());
}

TEST_CASE("config: ls_method round trip") {
    for (LsMethod m : {LsMethod::Auto, LsMethod::Direct, LsMethod::Iterative})
        CHECK(parse_ls_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_ls_method("lu"), FormatError);
}

TEST_CASE("config: load from file") {
    EnvGuard env;
    const auto dir = oracle::scratch_dir("config");
    const auto path = dir / "desk.cfg";
    std::ofstream(path) << kBase << "name = from_file\n";
    const PipelineConfig c = load_pipeline_config(path, {"k_max=1"});
    CHECK(c.name == "from_file");
    CHECK(c.inversion.k_max == 1);
    try {
        load_pipeline_config(path, {"nx=x"});
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("nx") != std::string::npos);
    }
    CHECK_THROWS_AS(load_pipeline_config(dir / "missing.cfg"), FormatError);

    // The shipped configs all parse.
    for (const char* f : {"test1_desk.cfg", "test1.cfg", "test2.cfg", "test3.cfg"})
        CHECK_NOTHROW(load_pipeline_config(std::filesystem::path(NLSRECON_SOURCE_DIR) / "configs" / f));
}
