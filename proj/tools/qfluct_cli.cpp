#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "qfluct/experiments.hpp"

using namespace qf;

namespace {

int run(StudyKind kind, const std::string& config, const std::string& out, int threads, std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg;
    if (!config.empty()) {
        cfg = load_config(config);
    } else {
        cfg.kind = kind;
    }
    if (!cfg.study_given) cfg.kind = kind;
    if (cfg.kind != kind) {
        throw ConfigError({{"study", std::string("config is for '") + study_name(cfg.kind) + "', subcommand wants '" +
                                         study_name(kind) + "'"}});
    }
    if (seed) cfg.seed = *seed;
    auto issues = validate_config(cfg);
    if (!issues.empty()) throw ConfigError(issues);

    auto t0 = std::chrono::steady_clock::now();
    auto res = run_study(cfg, RunContext{out, threads});
    Real secs = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    std::cout << res.summary.dump(2) << "\n";
    for (auto& f : res.files) std::cerr << "wrote " << f << "\n";
    std::cerr << study_name(cfg.kind) << " finished in " << secs << " s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadratic fluctuation dynamics: scattering, condensate, kernel and Bogoliubov-flow studies"};
    app.require_subcommand(1);
    std::string config, out = "out";
    int threads = 1;
    std::uint64_t seed_value = 0;

    struct Sub {
        const char* name;
        StudyKind kind;
        const char* help;
    };
    const Sub subs[] = {
        {"scattering", StudyKind::Scattering, "Neumann scattering eigenvalue sweep and bounds"},
        {"nls", StudyKind::NlsConvergence, "Hartree to NLS convergence in N"},
        {"kernels", StudyKind::KernelConvergence, "pair-kernel convergence k_N -> k"},
        {"fluct", StudyKind::FluctuationComparison, "finite-N vs limiting Bogoliubov flows"},
        {"suite", StudyKind::PropertySuite, "randomized algebra and integrator property checks"},
    };
    std::vector<std::pair<CLI::App*, StudyKind>> cmds;
    for (auto& s : subs) {
        auto* c = app.add_subcommand(s.name, s.help);
        c->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
        c->add_option("--out", out, "output directory")->capture_default_str();
        c->add_option("--threads", threads, "worker threads for independent sweep cells")
            ->check(CLI::Range(1, 256))
            ->capture_default_str();
        c->add_option("--seed", seed_value, "RNG seed (overrides the config)");
        cmds.emplace_back(c, s.kind);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (auto& [c, kind] : cmds)
            if (c->parsed()) {
                std::optional<std::uint64_t> seed;
                if (c->count("--seed")) seed = seed_value;
                return run(kind, config, out, threads, seed);
            }
    } catch (const Error& e) {
        std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return e.is_validation() ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
