#ifndef QFLUCT_EXPERIMENTS_HPP
#define QFLUCT_EXPERIMENTS_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qfluct/config.hpp"
#include "qfluct/dynamics.hpp"
#include "qfluct/io.hpp"

namespace qf {

struct RateFit {
    Real slope = 0.0;
    Real intercept = 0.0;
    Real slope_stderr = 0.0;
    std::vector<std::pair<Real, Real>> points;  // (log N, log error)
};

// Least squares in log-log coordinates; data are (N, error) pairs.
RateFit fit_rate(const std::vector<std::pair<Real, Real>>& data);

struct RunContext {
    std::string out_dir;  // empty: nothing written
    int threads = 1;
};

// Runs f(0..n-1) on a bounded pool; results are written by index, so the
// outcome does not depend on the thread count.  The first failing index wins.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

struct StudyOutput {
    CsvTable table;
    nlohmann::ordered_json summary;
    std::string hash;
    std::vector<std::string> files;
};

struct ScatteringRow {
    Real beta, N, lambda, N_lambda, deviation;
    BoundReport bounds;
};

struct ScatteringStudy {
    std::vector<ScatteringRow> rows;
    std::vector<std::pair<Real, std::optional<RateFit>>> fits;  // per beta
    Real b0 = 0.0;
    Real a0 = 0.0;
    std::optional<Real> a0_closed;  // square well only
    StudyOutput out;
};

struct NlsRow {
    Real beta, N, t, distance;
    Real mass_drift, energy_drift;  // Hartree flow
};

struct NlsStudy {
    std::vector<NlsRow> rows;
    Real limit_mass_drift = 0.0, limit_energy_drift = 0.0;
    struct Fit {
        Real beta, t;
        std::optional<RateFit> fit;
        bool monotone;
    };
    std::vector<Fit> fits;
    StudyOutput out;
};

struct KernelRow {
    Real beta, N, t;
    Real grid_distance, resolved_distance, p_distance;
    Real kN_norm, k_norm, p_bound;
    bool dominated;
};

struct KernelStudy {
    std::vector<KernelRow> rows;
    struct Fit {
        Real beta, t;
        std::optional<RateFit> resolved, grid;
    };
    std::vector<Fit> fits;
    bool all_dominated = true;
    StudyOutput out;
};

struct FluctRow {
    Real beta, N, t;
    Real distance, particles_N, particles_limit, defect_N, defect_limit;
};

struct FluctStudy {
    std::vector<FluctRow> rows;
    struct Flag {
        Real beta, t;
        bool end_smaller;  // distance at largest N < at smallest N
        bool monotone;     // strictly decreasing along the sweep
    };
    std::vector<Flag> flags;
    Real max_phase_imag = 0.0;
    Real max_eta_imag = 0.0;
    std::vector<GrowthReport> growth;  // limit first, then one per (beta, N)
    StudyOutput out;
};

struct SuiteRow {
    std::string property;
    int instance;
    int size;
    Real value, threshold;
    bool pass;
};

struct SuiteStudy {
    std::vector<SuiteRow> rows;
    bool all_pass = true;
    StudyOutput out;
};

ScatteringStudy run_scattering_study(const ExperimentConfig& cfg, const RunContext& ctx = {});
NlsStudy run_nls_convergence(const ExperimentConfig& cfg, const RunContext& ctx = {});
KernelStudy run_kernel_convergence(const ExperimentConfig& cfg, const RunContext& ctx = {});
FluctStudy run_fluctuation_comparison(const ExperimentConfig& cfg, const RunContext& ctx = {});
SuiteStudy run_property_suite(const ExperimentConfig& cfg, const RunContext& ctx = {});

// Dispatch on cfg.kind; returns the written CSV/summary.
StudyOutput run_study(const ExperimentConfig& cfg, const RunContext& ctx);

// Generator track of the quadratic flow along a condensate trajectory.
// N = 0 selects the limiting (N -> infinity) generator.
struct TrackInputs {
    PotentialSpec V;
    Real N = 0.0;
    Real beta = 0.5;
    Real ell = 1.0;
    int n_grid = 4000;
    GridField phi0;
    Real t_final = 0.5;
    Real dt = 1e-3;
    int knots_per_unit = 20;
    Real series_tol = 1e-10;
    Real max_drift = 1e-4;
};
GeneratorTrack build_track(const TrackInputs& in);

}  // namespace qf

#endif  // QFLUCT_EXPERIMENTS_HPP
