#include "qfluct/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qfluct/fields.hpp"
#include "qfluct/kernels.hpp"

namespace qf {

namespace {

const std::pair<StudyKind, const char*> kStudies[] = {
    {StudyKind::Scattering, "scattering"},
    {StudyKind::NlsConvergence, "nls_convergence"},
    {StudyKind::KernelConvergence, "kernel_convergence"},
    {StudyKind::FluctuationComparison, "fluctuation_comparison"},
    {StudyKind::PropertySuite, "property_suite"},
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool to_real(const std::string& s, Real& out) {
    auto t = trim(s);
    auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    return r.ec == std::errc() && r.ptr == t.data() + t.size() && std::isfinite(out);
}

bool to_int(const std::string& s, long long& out) {
    auto t = trim(s);
    auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

std::string fmt(Real x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_list(const std::vector<Real>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

class Reader {
public:
    std::vector<ConfigIssue> issues;

    void real(const std::string& path, const std::string& v, Real& out) {
        if (!to_real(v, out)) issues.push_back({path, "not a finite number: '" + trim(v) + "'"});
    }
    void integer(const std::string& path, const std::string& v, int& out) {
        long long x;
        if (!to_int(v, x) || x < -2147483647LL || x > 2147483647LL)
            issues.push_back({path, "not an integer: '" + trim(v) + "'"});
        else
            out = static_cast<int>(x);
    }
    void list(const std::string& path, const std::string& v, std::vector<Real>& out) {
        out.clear();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            Real x;
            if (!to_real(item, x)) {
                issues.push_back({path, "bad list entry: '" + trim(item) + "'"});
                return;
            }
            out.push_back(x);
        }
    }
    void boolean(const std::string& path, const std::string& v, bool& out) {
        auto t = trim(v);
        if (t == "true" || t == "1") out = true;
        else if (t == "false" || t == "0") out = false;
        else issues.push_back({path, "expected true or false: '" + t + "'"});
    }
};

}  // namespace

const char* study_name(StudyKind k) {
    for (auto& [kind, name] : kStudies)
        if (kind == k) return name;
    return "?";
}

bool parse_study(const std::string& s, StudyKind& out) {
    for (auto& [kind, name] : kStudies)
        if (s == name) {
            out = kind;
            return true;
        }
    return false;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(ErrorKind::Validation,
            [&] {
                std::string m = "invalid configuration:";
                for (auto& i : issues) m += "\n  " + i.path + ": " + i.message;
                return m;
            }()),
      issues_(std::move(issues)) {}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    Reader rd;
    std::map<std::string, int> seen;
    std::string section;
    std::istringstream in(text);
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') {
                rd.issues.push_back({where, "unterminated section header"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section != "potential" && section != "grid" && section != "sweep" && section != "tolerances")
                rd.issues.push_back({where, "unknown section [" + section + "]"});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            rd.issues.push_back({where, "expected key = value"});
            continue;
        }
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        std::string path = section.empty() ? key : section + "." + key;
        if (seen[path]++) {
            rd.issues.push_back({path, "duplicate key (" + where + ")"});
            continue;
        }
        if (path == "study") {
            if (!parse_study(val, c.kind)) rd.issues.push_back({path, "unknown study '" + val + "'"});
            c.study_given = true;
        } else if (path == "seed") {
            long long s;
            if (!to_int(val, s) || s < 0) rd.issues.push_back({path, "expected a non-negative integer"});
            else c.seed = static_cast<std::uint64_t>(s);
        } else if (path == "potential.name") c.potential.name = val;
        else if (path == "potential.V0") rd.real(path, val, c.potential.V0);
        else if (path == "potential.R") rd.real(path, val, c.potential.R);
        else if (path == "grid.dim") rd.integer(path, val, c.grid.dim);
        else if (path == "grid.G") rd.integer(path, val, c.grid.G);
        else if (path == "grid.L") rd.real(path, val, c.grid.L);
        else if (path == "sweep.beta") rd.list(path, val, c.beta);
        else if (path == "sweep.ell") rd.real(path, val, c.ell);
        else if (path == "sweep.N") rd.list(path, val, c.N_list);
        else if (path == "sweep.times") rd.list(path, val, c.times);
        else if (path == "sweep.dt") rd.real(path, val, c.dt);
        else if (path == "sweep.sigma") rd.real(path, val, c.sigma);
        else if (path == "sweep.n_grid") rd.integer(path, val, c.n_grid);
        else if (path == "sweep.knots_per_unit") rd.integer(path, val, c.knots_per_unit);
        else if (path == "sweep.frame_dt") rd.real(path, val, c.frame_dt);
        else if (path == "sweep.instances") rd.integer(path, val, c.instances);
        else if (path == "sweep.modes") rd.integer(path, val, c.modes);
        else if (path == "sweep.kernel_norm") rd.real(path, val, c.kernel_norm);
        else if (path == "sweep.dump") rd.boolean(path, val, c.dump);
        else if (path == "tolerances.defect") rd.real(path, val, c.tol.defect);
        else if (path == "tolerances.series") rd.real(path, val, c.tol.series);
        else if (path == "tolerances.energy_drift") rd.real(path, val, c.tol.energy_drift);
        else rd.issues.push_back({path, "unknown key (" + where + ")"});
    }
    auto more = validate_config(c);
    rd.issues.insert(rd.issues.end(), more.begin(), more.end());
    if (!rd.issues.empty()) throw ConfigError(rd.issues);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError({{"--config", "cannot read '" + path + "'"}});
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

PotentialSpec make_potential(const PotentialConfig& p) {
    if (p.name == "square_well") return square_well(p.V0, p.R);
    if (p.name == "parabolic_well") return parabolic_well(p.V0, p.R);
    if (p.name == "zero") return zero_potential();
    throw ConfigError({{"potential.name", "unknown potential '" + p.name + "'"}});
}

std::vector<ConfigIssue> validate_config(const ExperimentConfig& c) {
    std::vector<ConfigIssue> out;
    auto bad = [&](const std::string& p, const std::string& m) { out.push_back({p, m}); };
    const bool suite = c.kind == StudyKind::PropertySuite;
    const bool on_grid = c.kind != StudyKind::Scattering && !suite;

    const auto& pn = c.potential.name;
    bool pot_ok = pn == "square_well" || pn == "parabolic_well" || pn == "zero";
    if (!pot_ok) bad("potential.name", "expected square_well, parabolic_well or zero");
    if (pn != "zero") {
        if (!(c.potential.R > 0)) bad("potential.R", "must be positive");
        if (!std::isfinite(c.potential.V0)) bad("potential.V0", "must be finite");
    }

    if (c.grid.dim != 1 && c.grid.dim != 3) bad("grid.dim", "must be 1 or 3");
    if (c.grid.G < 2 || (c.grid.G & (c.grid.G - 1)) != 0 || c.grid.G > 4096) bad("grid.G", "must be a power of two in [2, 4096]");
    if (!(c.grid.L > 0)) bad("grid.L", "must be positive");
    bool grid_ok = out.empty() || std::none_of(out.begin(), out.end(), [](auto& i) { return i.path.rfind("grid.", 0) == 0; });
    if (grid_ok && (c.kind == StudyKind::KernelConvergence || c.kind == StudyKind::FluctuationComparison) &&
        c.grid.M() > kMaxKernelModes)
        bad("grid", "M = G^dim = " + std::to_string(c.grid.M()) + " exceeds " + std::to_string(kMaxKernelModes));
    if (grid_ok && c.kind == StudyKind::FluctuationComparison && c.grid.M() > 512)
        bad("grid", "frame evolution needs M <= 512");

    if (c.beta.empty()) bad("sweep.beta", "needs at least one value");
    for (Real b : c.beta)
        if (!(b > 0 && b < 1)) bad("sweep.beta", "values must lie in (0, 1), got " + fmt(b));
    if (!(c.ell > 0)) bad("sweep.ell", "must be positive");
    else if (on_grid && grid_ok && c.ell > 0.5 * c.grid.L) bad("sweep.ell", "must not exceed L/2 = " + fmt(0.5 * c.grid.L));

    if (!suite) {
        if (c.N_list.empty()) bad("sweep.N", "needs at least one value");
        for (size_t i = 1; i < c.N_list.size(); ++i)
            if (!(c.N_list[i] > c.N_list[i - 1])) {
                bad("sweep.N", "must be strictly increasing");
                break;
            }
        if (pot_ok && c.potential.R > 0 && c.ell > 0 && !c.N_list.empty()) {
            PotentialSpec V = make_potential(c.potential);
            for (Real b : c.beta) {
                if (!(b > 0 && b < 1)) continue;
                Real nmin = min_admissible_N(V, b, c.ell);
                for (Real N : c.N_list)
                    if (!(N >= 1) || !(N > nmin))
                        bad("sweep.N", "N = " + fmt(N) + " outside the admissible range N > " + fmt(std::max(nmin, 1.0)) +
                                           " at beta = " + fmt(b));
            }
        }
    }

    if (c.kind != StudyKind::Scattering && !suite) {
        if (c.times.empty()) bad("sweep.times", "needs at least one value");
        for (size_t i = 0; i < c.times.size(); ++i)
            if (!(c.times[i] >= 0) || (i && !(c.times[i] > c.times[i - 1]))) {
                bad("sweep.times", "must be non-negative and strictly increasing");
                break;
            }
        if (!(c.dt > 0) || c.dt > 0.1) bad("sweep.dt", "must lie in (0, 0.1]");
        if (!(c.sigma > 0)) bad("sweep.sigma", "must be positive");
    }
    if (!(c.n_grid >= 64 && c.n_grid <= 1000000)) bad("sweep.n_grid", "must lie in [64, 1e6]");
    if (c.knots_per_unit < 1) bad("sweep.knots_per_unit", "must be at least 1");
    if (!(c.frame_dt > 0) || c.frame_dt > 0.5) bad("sweep.frame_dt", "must lie in (0, 0.5]");
    if (c.instances < 1) bad("sweep.instances", "must be at least 1");
    if (c.modes < 2 || c.modes > kMaxKernelModes) bad("sweep.modes", "must lie in [2, " + std::to_string(kMaxKernelModes) + "]");
    if (!(c.kernel_norm > 0)) bad("sweep.kernel_norm", "must be positive");
    if (!(c.tol.defect > 0)) bad("tolerances.defect", "must be positive");
    if (!(c.tol.series > 0)) bad("tolerances.series", "must be positive");
    if (!(c.tol.energy_drift > 0)) bad("tolerances.energy_drift", "must be positive");
    return out;
}

std::string canonical_config(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "study = " << study_name(c.kind) << "\n"
      << "seed = " << c.seed << "\n"
      << "[potential]\nname = " << c.potential.name << "\nV0 = " << fmt(c.potential.V0) << "\nR = " << fmt(c.potential.R)
      << "\n[grid]\ndim = " << c.grid.dim << "\nG = " << c.grid.G << "\nL = " << fmt(c.grid.L) << "\n[sweep]\nbeta = "
      << fmt_list(c.beta) << "\nell = " << fmt(c.ell) << "\nN = " << fmt_list(c.N_list) << "\ntimes = " << fmt_list(c.times)
      << "\ndt = " << fmt(c.dt) << "\nsigma = " << fmt(c.sigma) << "\nn_grid = " << c.n_grid
      << "\nknots_per_unit = " << c.knots_per_unit << "\nframe_dt = " << fmt(c.frame_dt) << "\ninstances = " << c.instances
      << "\nmodes = " << c.modes << "\nkernel_norm = " << fmt(c.kernel_norm) << "\ndump = " << (c.dump ? "true" : "false")
      << "\n[tolerances]\ndefect = " << fmt(c.tol.defect) << "\nseries = " << fmt(c.tol.series)
      << "\nenergy_drift = " << fmt(c.tol.energy_drift) << "\n";
    return o.str();
}

std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : canonical_config(c)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace qf
