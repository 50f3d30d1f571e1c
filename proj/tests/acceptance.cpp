// One line per acceptance criterion.  Study runs use the shipped configs and
// are repeated once to check byte-identical CSV output.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "qfluct/experiments.hpp"
#include "qfluct/fields.hpp"

using namespace qf;
namespace fs = std::filesystem;

#ifndef QFLUCT_CONFIG_DIR
#define QFLUCT_CONFIG_DIR "configs"
#endif

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
    std::printf("[%s] %2d %-34s %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class F>
auto timed(Real& secs, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    secs = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string g(Real x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", x);
    return b;
}

ExperimentConfig cfg_of(const std::string& name) { return load_config(std::string(QFLUCT_CONFIG_DIR) + "/" + name); }

}  // namespace

int main() {
    const fs::path root = fs::path("acceptance_out");
    const std::string run1 = (root / "run1").string(), run2 = (root / "run2").string();
    std::vector<std::string> csvs;  // study stems, one config each

    try {
        // 1-3: scattering
        {
            auto cfg = cfg_of("scattering.cfg");
            Real secs;
            auto st = timed(secs, [&] { return run_scattering_study(cfg, {run1, 1}); });
            csvs.push_back("scattering");
            const auto& fit = st.fits.front().second;
            bool ok = fit && fit->slope >= -0.7 && fit->slope <= -0.3 && secs < 10;
            report(1, "scattering eigenvalue asymptotics", ok,
                   "slope " + (fit ? g(fit->slope) : std::string("n/a")) + " in [-0.7, -0.3], " + g(secs) + " s");

            Real c0min = 2, fmax = 0, wlo = 1e300, whi = 0, glo = 1e300, ghi = 0;
            for (auto& r : st.rows) {
                c0min = std::min(c0min, r.bounds.c0);
                fmax = std::max(fmax, r.bounds.f_max);
                wlo = std::min(wlo, r.bounds.C_omega), whi = std::max(whi, r.bounds.C_omega);
                glo = std::min(glo, r.bounds.C_grad), ghi = std::max(ghi, r.bounds.C_grad);
            }
            Real c0max = 0;
            for (auto& r : st.rows) c0max = std::max(c0max, r.bounds.c0);
            ok = c0min > 0 && c0max <= 1 && fmax <= 1 + 1e-12 && whi / wlo < 2 && ghi / glo < 2 && secs < 10;
            report(2, "pointwise scattering bounds", ok,
                   "c0 in [" + g(c0min) + ", " + g(c0max) + "], max f " + g(fmax) + ", C_omega ratio " + g(whi / wlo) +
                       ", C_grad ratio " + g(ghi / glo));

            Real rel = st.a0_closed ? std::abs(st.a0 - *st.a0_closed) / *st.a0_closed : 1.0;
            ok = st.a0_closed && rel <= 1e-4 && st.a0 <= st.b0 / (8 * kPi);
            report(3, "scattering length", ok,
                   "a0 " + g(st.a0) + ", relative error " + g(rel) + ", b0/8pi " + g(st.b0 / (8 * kPi)));
        }

        // 4-5: condensate flows
        {
            auto cfg = cfg_of("nls.cfg");
            Real secs;
            auto st = timed(secs, [&] { return run_nls_convergence(cfg, {run1, 1}); });
            csvs.push_back("nls");
            Real md = st.limit_mass_drift, ed = st.limit_energy_drift;
            for (auto& r : st.rows) md = std::max(md, r.mass_drift), ed = std::max(ed, r.energy_drift);
            bool ok = md <= 1e-9 && ed <= 1e-6 && cfg.times.back() >= 1.0 && cfg.grid.G == 16 && secs < 60;
            report(4, "condensate conservation", ok,
                   "mass drift " + g(md) + ", energy drift " + g(ed) + ", " + g(secs) + " s");

            std::optional<RateFit> fit;
            for (auto& f : st.fits)
                if (f.beta == 0.5 && std::abs(f.t - 0.5) < 1e-12) fit = f.fit;
            ok = fit && std::abs(fit->slope + 0.5) <= 0.25 && secs < 300;
            report(5, "Hartree to NLS rate", ok, "slope " + (fit ? g(fit->slope) : std::string("n/a")) + " at t = 0.5");
        }

        // 6-8: randomized algebra
        Real sq_err = 1;
        bool sq_pass = false;
        PotentialSpec V;
        {
            auto cfg = cfg_of("suite.cfg");
            Real secs;
            auto st = timed(secs, [&] { return run_property_suite(cfg, {run1, 1}); });
            csvs.push_back("suite");
            V = make_potential(cfg.potential);
            auto worst = [&](const std::string& p, int& count, bool& pass) {
                Real w = -1e300;
                count = 0;
                pass = true;
                for (auto& r : st.rows)
                    if (r.property == p) {
                        w = std::max(w, r.value);
                        ++count;
                        pass = pass && r.pass;
                    }
                return w;
            };
            int n;
            bool pass;
            Real w = worst("bogoliubov_identity", n, pass);
            report(6, "hyperbolic identity", pass && n >= 20 && cfg.kernel_norm <= 5 && cfg.modes <= 1024 && secs < 60,
                   "max defect " + g(w) + " over " + std::to_string(n) + " kernels, suite " + g(secs) + " s");
            w = worst("series_vs_eigen", n, pass);
            report(7, "series vs eigendecomposition", pass && n > 0, "max difference " + g(w));
            int m;
            bool pass2;
            w = worst("ad_series_bound_excess", n, pass);
            worst("ad_series_terms_missing", m, pass2);
            report(8, "ad-series term bound", pass && pass2 && n >= 10,
                   "max excess over bound " + g(w) + " on " + std::to_string(n) + " instances, n <= 8");

            sq_err = worst("squeeze_sinh2_rel_error", n, sq_pass);
        }

        // 9: kernels
        {
            auto cfg = cfg_of("kernels.cfg");
            auto st = run_kernel_convergence(cfg, {run1, 1});
            csvs.push_back("kernels");
            bool ok = st.all_dominated;
            std::string d;
            for (auto& f : st.fits) {
                if (f.beta != 0.5) continue;
                bool in = f.resolved && f.resolved->slope >= -0.5 && f.resolved->slope <= -0.1;
                ok = ok && in;
                d += "t=" + g(f.t) + " slope " + (f.resolved ? g(f.resolved->slope) : std::string("n/a")) + "; ";
            }
            report(9, "pair-kernel convergence", ok, d + "p dominated: " + (st.all_dominated ? "yes" : "no"));
        }

        // 10: integrator checks on the assembled limiting generator (M = 64)
        {
            Grid g3{3, 4, 4.0};
            TrackInputs in;
            in.V = V;
            in.phi0 = gaussian_field(g3, 0.8);
            in.t_final = 1.0;
            in.dt = 1e-3;
            auto track = build_track(in);
            auto f0 = BogoliubovFrame::vacuum(g3.M(), g3.weight());
            auto tr = evolve_frame(f0, track.fn(), 1.0, 1e-3);
            Real dmax = 0;
            for (Real d : tr.series.symplectic_defect) dmax = std::max(dmax, d);
            EvolveOptions loose;
            loose.defect_tol = 1.0;
            Real e1 = compare_frames(evolve_frame(f0, track.fn(), 1.0, 0.0125, loose).final, tr.final);
            Real e2 = compare_frames(evolve_frame(f0, track.fn(), 1.0, 0.00625, loose).final, tr.final);
            Real order = std::log2(e1 / e2);
            bool ok = sq_pass && dmax <= 1e-6 && std::abs(order - 4) <= 0.3;
            report(10, "quadratic-flow integrity", ok,
                   "squeeze rel error " + g(sq_err) + ", max defect " + g(dmax) + " (M = 64, dt = 1e-3), order " + g(order));
        }

        // 11-12: fluctuation flows
        {
            auto cfg = cfg_of("fluct.cfg");
            Real secs;
            auto st = timed(secs, [&] { return run_fluctuation_comparison(cfg, {run1, 1}); });
            csvs.push_back("fluct");
            bool ok = secs < 600;
            std::string d;
            for (auto& f : st.flags) {
                if (std::abs(f.t - 0.5) > 1e-12) continue;
                ok = ok && f.end_smaller;
                Real first = 0, last = 0;
                for (auto& r : st.rows)
                    if (r.beta == f.beta && r.t == f.t) (r.N == cfg.N_list.front() ? first : last) = r.distance;
                d += "beta " + g(f.beta) + ": " + g(first) + " -> " + g(last) + "; ";
            }
            report(11, "fluctuation comparison", ok, d + g(secs) + " s");

            Real im = std::max(st.max_phase_imag, st.max_eta_imag);
            Real suite_im = 0;
            {
                std::ifstream f(run1 + "/suite.csv");
                std::string line;
                while (std::getline(f, line))
                    if (line.rfind("eta_imaginary_part", 0) == 0 || line.rfind("phase_imaginary_part", 0) == 0) {
                        std::stringstream ss(line);
                        std::string cell;
                        for (int c = 0; c < 4 && std::getline(ss, cell, ','); ++c) {}
                        suite_im = std::max(suite_im, std::stod(cell));
                    }
            }
            report(12, "phase consistency", im <= 1e-10 && suite_im <= 1e-10,
                   "max |Im| " + g(std::max(im, suite_im)) + " over all assembled generators");
        }

        // 13: repeat every run
        {
            bool ok = true;
            std::string d;
            for (auto& stem : csvs) {
                auto cfg = cfg_of(stem + ".cfg");
                run_study(cfg, {run2, 1});
                bool same = slurp(run1 + "/" + stem + ".csv") == slurp(run2 + "/" + stem + ".csv") &&
                            !slurp(run1 + "/" + stem + ".csv").empty();
                ok = ok && same;
                d += stem + (same ? " same; " : " DIFFERS; ");
            }
            report(13, "determinism", ok, d);
        }
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
