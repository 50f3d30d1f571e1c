#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "qfluct/experiments.hpp"
#include "qfluct/fields.hpp"

using namespace qf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("qfluct_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const char* kSmallFluct = R"(
study = fluctuation_comparison
[potential]
name = square_well
V0 = 1
R = 1
[grid]
dim = 3
G = 4
L = 4
[sweep]
beta = 0.5
N = 16, 256
times = 0.1, 0.2
dt = 1e-3
sigma = 0.8
frame_dt = 0.025
)";

}  // namespace

TEST_CASE("fit_rate") {
    SUBCASE("exact power law") {
        auto f = fit_rate({{4, 0.5}, {16, 0.25}, {64, 0.125}});
        CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-14));
        CHECK(f.slope_stderr == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(f.points.size() == 3);
    }
    SUBCASE("constant data") {
        CHECK(fit_rate({{1, 2}, {10, 2}, {100, 2}}).slope == doctest::Approx(0.0));
    }
    SUBCASE("noisy synthetic data") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<Real> u(-1, 1);
        std::vector<std::pair<Real, Real>> d;
        for (Real N = 10; N < 1e5; N *= 2) d.emplace_back(N, 3 * std::pow(N, -0.7) * (1 + 0.01 * u(rng)));
        auto f = fit_rate(d);
        CHECK(std::abs(f.slope + 0.7) < 0.05);
        CHECK(f.slope_stderr >= 0.0);
    }
    SUBCASE("refusals") {
        CHECK_THROWS_AS(fit_rate({{1, 1}, {2, 0.5}}), Error);
        CHECK_THROWS_AS(fit_rate({{1, 1}, {2, 0.0}, {4, 0.1}}), Error);
        CHECK_THROWS_AS(fit_rate({{1, 1}, {2, -1.0}, {4, 0.1}}), Error);
    }
}

TEST_CASE("config parsing") {
    auto c = parse_config(kSmallFluct);
    CHECK(c.kind == StudyKind::FluctuationComparison);
    CHECK(c.study_given);
    CHECK(c.grid.G == 4);
    CHECK(c.N_list == std::vector<Real>{16, 256});
    CHECK(c.times.size() == 2);
    CHECK(config_hash(c) == config_hash(parse_config(kSmallFluct)));

    auto c2 = c;
    c2.N_list.back() = 512;
    CHECK(config_hash(c2) != config_hash(c));
    CHECK(canonical_config(parse_config(canonical_config(c))) == canonical_config(c));
}

TEST_CASE("config validation reports every problem with its path") {
    std::string text = R"(
study = nls_convergence
[grid]
dim = 2
G = 12
[sweep]
N = 64, 16, 1
beta = 1.5
colour = blue
[extras]
)";
    try {
        parse_config(text);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.is_validation());
        std::set<std::string> paths;
        for (auto& i : e.issues()) paths.insert(i.path);
        CHECK(paths.count("grid.dim"));
        CHECK(paths.count("grid.G"));
        CHECK(paths.count("sweep.N"));
        CHECK(paths.count("sweep.beta"));
        CHECK(paths.count("sweep.colour"));
        CHECK(paths.count("line 10"));
    }
}

TEST_CASE("inadmissible N is refused before any run") {
    auto c = parse_config(kSmallFluct);
    c.beta = {0.25};
    c.ell = 0.5;  // R N^-b < ell needs N > 16
    auto issues = validate_config(c);
    REQUIRE(!issues.empty());
    CHECK(issues[0].path == "sweep.N");
    CHECK(issues[0].message.find("N > 16") != std::string::npos);
}

TEST_CASE("csv output") {
    CsvTable t;
    t.header = {"name", "value"};
    t.add({"plain", format_real(0.1)});
    t.add({"with,comma", "say \"hi\""});
    CHECK_THROWS_AS(t.add({"short"}), Error);
    auto s = render_csv(t, "abc");
    CHECK(s == "name,value\r\nplain,0.1\r\n\"with,comma\",\"say \"\"hi\"\"\"\r\n# config_hash=abc\r\n");
    CHECK(format_real(1.0 / 3) == "0.3333333333333333");
}

TEST_CASE("raw arrays round-trip") {
    auto dir = scratch("raw");
    CMat a(2, 3);
    a << Complex(1, 2), Complex(3, -4), 0.5, Complex(0, 1e-300), -7, Complex(1e10, 3);
    write_array((dir / "a").string(), a, {{"what", "test"}});
    auto r = read_array((dir / "a").string());
    CHECK(r.dtype == "complex128");
    CHECK(r.shape == std::vector<long>{2, 3});
    CHECK(r.data[2] == 3.0);
    CHECK(r.data[3] == -4.0);
    CHECK(fs::file_size(dir / "a.bin") == 6 * 16);
    RMat b = RMat::Identity(2, 2);
    write_array((dir / "b").string(), b);
    CHECK(read_array((dir / "b").string()).data == std::vector<Real>{1, 0, 0, 1});
}

TEST_CASE("scattering study with no potential has zero deviations") {
    ExperimentConfig c;
    c.kind = StudyKind::Scattering;
    c.potential.name = "zero";
    c.N_list = {10, 100, 1000};
    auto st = run_scattering_study(c);
    for (auto& r : st.rows) CHECK(r.deviation == 0.0);
    CHECK(!st.fits.front().second);
}

TEST_CASE("scattering study reruns are byte-identical") {
    ExperimentConfig c;
    c.kind = StudyKind::Scattering;
    c.N_list = {64, 256, 1024};
    c.n_grid = 1000;
    auto d1 = scratch("det1"), d2 = scratch("det2");
    run_scattering_study(c, {d1.string(), 1});
    run_scattering_study(c, {d2.string(), 3});
    CHECK(slurp(d1 / "scattering.csv") == slurp(d2 / "scattering.csv"));
    CHECK(slurp(d1 / "scattering_summary.json") == slurp(d2 / "scattering_summary.json"));
    auto csv = slurp(d1 / "scattering.csv");
    CHECK(csv.rfind("beta,N,", 0) == 0);
    CHECK(csv.find("# config_hash=" + config_hash(c)) != std::string::npos);
}

TEST_CASE("without interaction both condensate flows coincide") {
    ExperimentConfig c;
    c.kind = StudyKind::NlsConvergence;
    c.potential.name = "zero";
    c.grid = Grid{3, 8, 8.0};
    c.N_list = {10, 100, 1000};
    c.times = {0.1};
    c.dt = 1e-2;
    c.sigma = 1.2;
    auto st = run_nls_convergence(c);
    for (auto& r : st.rows) CHECK(r.distance == 0.0);
}

TEST_CASE("zero condensate gives identical kinetic flows") {
    Grid g{3, 4, 4.0};
    TrackInputs in;
    in.V = square_well(1, 1);
    in.phi0 = GridField{g, CVec::Zero(g.M())};
    in.t_final = 0.2;
    in.dt = 1e-2;
    auto lim = build_track(in);
    in.N = 64;
    auto fin = build_track(in);
    EvolveOptions opt;
    opt.stepper = Stepper::Lawson;
    opt.kinetic = g;
    auto f0 = BogoliubovFrame::vacuum(g.M(), g.weight());
    auto a = evolve_frame(f0, lim.fn(), 0.2, 0.05, opt), b = evolve_frame(f0, fin.fn(), 0.2, 0.05, opt);
    CHECK(compare_frames(a.final, b.final) == 0.0);
    CHECK(particle_number(a.final) == 0.0);
}

TEST_CASE("small fluctuation comparison end to end") {
    auto c = parse_config(kSmallFluct);
    auto dir = scratch("fluct");
    c.dump = true;
    auto st = run_fluctuation_comparison(c, {dir.string(), 2});
    REQUIRE(st.rows.size() == 4);
    for (auto& r : st.rows) {
        CHECK(std::isfinite(r.distance));
        CHECK(r.particles_N >= 0);
        CHECK(r.defect_N < 1e-6);
    }
    for (auto& gr : st.growth) {
        CHECK(gr.starts_at_zero);
        CHECK(gr.finite);
    }
    CHECK(st.max_phase_imag <= 1e-10);
    CHECK(st.max_eta_imag <= 1e-10);
    CHECK(st.flags.size() == 2);
    CHECK(fs::exists(dir / "fluct.csv"));
    CHECK(fs::exists(dir / "frame_limit_U.bin"));
    CHECK(read_array((dir / "frame_limit_V").string()).shape == std::vector<long>{64, 64});
}

#ifdef QFLUCT_CLI_PATH
TEST_CASE("cli exit codes") {
    auto dir = scratch("cli");
    std::ofstream(dir / "bad.cfg") << "[grid]\nG = 3\n";
    std::ofstream(dir / "ok.cfg") << "[sweep]\nN = 64, 256, 1024\nn_grid = 500\n";
    auto run = [&](const std::string& args) {
        std::string cmd = std::string(QFLUCT_CLI_PATH) + " " + args + " > " + (dir / "log").string() + " 2>&1";
        int rc = std::system(cmd.c_str());
        return WEXITSTATUS(rc);
    };
    CHECK(run("scattering --config " + (dir / "ok.cfg").string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "scattering.csv"));
    CHECK(run("scattering --config " + (dir / "bad.cfg").string()) == 2);
    CHECK(slurp(dir / "log").find("grid.G") != std::string::npos);
    CHECK(run("nls --config " + (dir / "ok.cfg").string() + " --out " + (dir / "out2").string()) == 0);
    CHECK(run("kernels --threads 0") == 2);
    CHECK(run("bogus") == 2);
}
#endif
