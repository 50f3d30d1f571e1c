#ifndef QFLUCT_CONFIG_HPP
#define QFLUCT_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qfluct/grid.hpp"
#include "qfluct/scattering.hpp"

namespace qf {

enum class StudyKind { Scattering, NlsConvergence, KernelConvergence, FluctuationComparison, PropertySuite };

const char* study_name(StudyKind k);
bool parse_study(const std::string& s, StudyKind& out);

struct PotentialConfig {
    std::string name = "square_well";  // square_well | parabolic_well | zero
    Real V0 = 1.0;
    Real R = 1.0;
};

struct Tolerances {
    Real defect = 1e-6;        // symplectic defect per frame
    Real series = 1e-10;       // ad-series truncation
    Real energy_drift = 1e-4;  // split-step refusal
};

struct ExperimentConfig {
    StudyKind kind = StudyKind::Scattering;
    PotentialConfig potential;
    std::vector<Real> beta{0.5};
    Real ell = 1.0;
    std::vector<Real> N_list;
    Grid grid{3, 16, 8.0};
    std::vector<Real> times{0.5};
    Real dt = 1e-3;            // condensate step
    Real sigma = 0.7;          // width of the initial Gaussian
    int n_grid = 4000;         // radial scattering grid
    int knots_per_unit = 20;   // generator time grid
    Real frame_dt = 0.025;     // Bogoliubov frame step
    int instances = 20;        // property suite
    int modes = 256;           // property suite kernel size
    Real kernel_norm = 5.0;    // property suite: largest ||k||_HS
    bool dump = false;         // raw frame / kernel arrays
    Tolerances tol;
    std::uint64_t seed = 0;
    bool study_given = false;  // a 'study =' line was present
};

struct ConfigIssue {
    std::string path;     // "sweep.N", "grid.G", "line 7"
    std::string message;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

// Line-oriented key = value; '#' starts a comment; [section] headers;
// lists are comma separated.  Throws ConfigError with every problem found.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg);

PotentialSpec make_potential(const PotentialConfig& p);

// Normalised key = value dump; its FNV-1a hash tags every output.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace qf

#endif  // QFLUCT_CONFIG_HPP
