#include "qfluct/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace qf {

BogoliubovFrame BogoliubovFrame::vacuum(int M, Real weight, Real t) {
    return BogoliubovFrame{CMat::Identity(M, M), CMat::Zero(M, M), t, weight};
}

Real particle_number(const BogoliubovFrame& f) { return f.V.squaredNorm(); }

Real symplectic_defect(const BogoliubovFrame& f) {
    int M = f.size();
    CMat g = f.U.adjoint() * f.U - f.V.adjoint() * f.V - CMat::Identity(M, M);
    CMat x = f.U.transpose() * f.V;
    return std::max(g.norm(), (x - x.transpose()).norm());
}

Real compare_frames(const BogoliubovFrame& a, const BogoliubovFrame& b) {
    if (a.size() != b.size() || std::abs(a.t - b.t) > 1e-12 * std::max(1.0, std::abs(a.t)))
        throw Error(ErrorKind::Contract, "compare_frames: frames differ in size or time");
    return (a.U - b.U).norm() + (a.V - b.V).norm();
}

GeneratorTrack::GeneratorTrack(std::vector<Real> times, std::vector<QuadGenerator> gens)
    : times_(std::move(times)), gens_(std::move(gens)) {
    if (times_.empty() || times_.size() != gens_.size())
        throw Error(ErrorKind::Contract, "GeneratorTrack: times and generators must match");
    for (size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw Error(ErrorKind::Contract, "GeneratorTrack: times must increase");
}

QuadGenerator GeneratorTrack::at(Real t) const {
    const Real slack = 1e-9 * std::max(1.0, std::abs(times_.back()));
    if (t < times_.front() - slack || t > times_.back() + slack) {
        std::ostringstream os;
        os << "GeneratorTrack: t = " << t << " outside [" << times_.front() << ", " << times_.back() << "]";
        throw Error(ErrorKind::Contract, os.str());
    }
    if (times_.size() == 1) return gens_[0];
    size_t j = std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
    j = std::clamp<size_t>(j, 1, times_.size() - 1);
    const auto &g0 = gens_[j - 1], &g1 = gens_[j];
    Real s = std::clamp((t - times_[j - 1]) / (times_[j] - times_[j - 1]), 0.0, 1.0);
    QuadGenerator g = g0;
    g.A = (1 - s) * g0.A + s * g1.A;
    g.B = (1 - s) * g0.B + s * g1.B;
    g.phase = (1 - s) * g0.phase + s * g1.phase;
    g.eta = (1 - s) * g0.eta + s * g1.eta;
    g.t = t;
    return g;
}

GeneratorFn GeneratorTrack::fn() const {
    return [this](Real t) { return at(t); };
}

namespace {

struct Pair {
    CMat U, V;
    Pair& operator+=(const Pair& o) { U += o.U; V += o.V; return *this; }
};

Pair operator+(Pair a, const Pair& b) { return a += b; }
Pair operator*(Real s, const Pair& a) { return Pair{s * a.U, s * a.V}; }

// -i h1 Y with h1 = [[A', B], [-conj B, -conj A']], A' = A - kinetic
Pair rhs(const QuadGenerator& g, const RMat* kin, const Pair& y) {
    const Complex mi(0.0, -1.0);
    CMat Ap = g.A;
    if (kin) Ap -= kin->cast<Complex>();
    Pair d;
    d.U.noalias() = Ap * y.U;
    d.U.noalias() += g.B * y.V;
    d.V.noalias() = g.B.conjugate() * y.U;
    d.V.noalias() += Ap.conjugate() * y.V;
    d.U *= mi;
    d.V *= -mi;
    return d;
}

// exp(-i diag(L, -L) tau) applied through a precomputed e^{-i L tau}
struct Propagator {
    CMat E;
    Pair operator()(const Pair& y) const {
        Pair r;
        r.U.noalias() = E * y.U;
        r.V.noalias() = E.conjugate() * y.V;
        return r;
    }
};

Propagator kinetic_propagator(const RMat& L, Real tau) {
    Eigen::SelfAdjointEigenSolver<RMat> es(L);
    CVec ph(L.rows());
    for (int i = 0; i < L.rows(); ++i) ph[i] = std::polar(1.0, -es.eigenvalues()[i] * tau);
    CMat Q = es.eigenvectors().cast<Complex>();
    return Propagator{Q * ph.asDiagonal() * Q.transpose()};
}

Real gen_norm(const QuadGenerator& g) { return std::sqrt(g.A.squaredNorm() + g.B.squaredNorm()); }

}  // namespace

Trajectory evolve_frame(const BogoliubovFrame& frame0, const GeneratorFn& gen_at, Real t_final, Real dt,
                        const EvolveOptions& opt) {
    if (!(dt > 0) || !std::isfinite(t_final)) throw Error(ErrorKind::Validation, "evolve_frame: dt must be positive");
    if (frame0.U.rows() != frame0.U.cols() || frame0.V.rows() != frame0.U.rows() || frame0.V.cols() != frame0.U.cols())
        throw Error(ErrorKind::Contract, "evolve_frame: malformed frame");
    const int M = frame0.size();
    const Real t0 = frame0.t, span = t_final - t0;
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
    const Real h = span / n;
    if (opt.monitor && symplectic_defect(frame0) > opt.defect_tol)
        throw Error(ErrorKind::Contract, "evolve_frame: initial frame is not symplectic");

    RMat kin;
    Propagator E1, E2;
    const RMat* kp = nullptr;
    if (opt.stepper == Stepper::Lawson) {
        if (!opt.kinetic || opt.kinetic->M() != M)
            throw Error(ErrorKind::Contract, "evolve_frame: Lawson stepping needs the kinetic grid");
        kin = laplacian_matrix(*opt.kinetic);
        kp = &kin;
        E1 = kinetic_propagator(kin, h);
        E2 = kinetic_propagator(kin, h / 2);
    }

    std::vector<int> sample_steps;
    for (Real ts : opt.sample_times)
        sample_steps.push_back(std::clamp(static_cast<int>(std::lround((ts - t0) / h)), 0, n));

    Trajectory tr;
    Pair y{frame0.U, frame0.V};
    auto frame_at = [&](Real t) { return BogoliubovFrame{y.U, y.V, t, frame0.weight}; };
    auto record = [&](int step, Real t, const QuadGenerator& g, Real defect) {
        for (int s : sample_steps)
            if (s == step) tr.samples.push_back(frame_at(t));
        if (opt.series_every > 0 && (step % opt.series_every == 0 || step == n)) {
            tr.series.times.push_back(t);
            tr.series.particle_number.push_back(y.V.squaredNorm());
            tr.series.symplectic_defect.push_back(defect);
            tr.series.generator_norms.push_back(gen_norm(g));
        }
    };

    QuadGenerator g0 = gen_at(t0);
    record(0, t0, g0, opt.monitor ? symplectic_defect(frame0) : 0.0);
    for (int k = 0; k < n; ++k) {
        Real t = t0 + k * h;
        QuadGenerator gm = gen_at(t + h / 2), g1 = gen_at(k + 1 == n ? t_final : t + h);
        Pair k1 = rhs(g0, kp, y);
        if (opt.stepper == Stepper::RK4) {
            Pair k2 = rhs(gm, kp, y + (h / 2) * k1);
            Pair k3 = rhs(gm, kp, y + (h / 2) * k2);
            Pair k4 = rhs(g1, kp, y + h * k3);
            y += (h / 6) * (k1 + k4) + (h / 3) * (k2 + k3);
        } else {
            Pair yh = E2(y);
            Pair k2 = rhs(gm, kp, E2(y + (h / 2) * k1));
            Pair k3 = rhs(gm, kp, yh + (h / 2) * k2);
            Pair k4 = rhs(g1, kp, E2(yh) + h * E2(k3));
            y = E1(y + (h / 6) * k1) + (h / 3) * E2(k2 + k3) + (h / 6) * k4;
        }
        Real tn = k + 1 == n ? t_final : t + h;
        Real defect = 0.0;
        if (opt.monitor) {
            defect = symplectic_defect(frame_at(tn));
            if (!(defect <= 100 * opt.defect_tol)) {
                std::ostringstream os;
                os << "evolve_frame: symplectic defect " << defect << " at t = " << tn;
                throw Error(ErrorKind::Diverged, os.str());
            }
        }
        g0 = std::move(g1);
        record(k + 1, tn, g0, defect);
    }
    tr.final = frame_at(t_final);
    tr.steps = n;
    return tr;
}

GrowthReport growth_report(const ObservableSeries& s) {
    GrowthReport r;
    const auto& N = s.particle_number;
    if (N.empty()) return r;
    r.initial_particles = N.front();
    r.final_particles = N.back();
    r.starts_at_zero = std::abs(N.front()) <= 1e-12;
    Real run = -1, on = 0;
    for (Real x : N) {
        r.finite = r.finite && std::isfinite(x);
        if (x >= run) { run = x; on += 1; }
        r.max_dip = std::max(r.max_dip, run - x);
        r.max_particles = std::max(r.max_particles, x);
    }
    r.monotone_fraction = on / N.size();
    if (!r.finite || N.size() < 3) return r;

    const int n = static_cast<int>(N.size());
    RVec y(n), t(n);
    for (int i = 0; i < n; ++i) {
        y[i] = std::log(N[i] + 1);
        t[i] = s.times[i];
    }
    if (y.norm() == 0) return r;
    // variable projection: (log C, c1) linear for fixed c2
    auto solve = [&](Real c2, RVec* coef) {
        RMat X(n, 2);
        X.col(0).setOnes();
        X.col(1) = (c2 * t.array()).exp().matrix();
        RVec c = X.colPivHouseholderQr().solve(y);
        if (coef) *coef = c;
        return (X * c - y).squaredNorm();
    };
    Real best = 1e-3, fbest = solve(best, nullptr);
    const int scan = 60;
    for (int i = 0; i <= scan; ++i) {
        Real c2 = 1e-3 * std::pow(2e4, Real(i) / scan);
        Real f = solve(c2, nullptr);
        if (f < fbest) { fbest = f; best = c2; }
    }
    auto res = boost::math::tools::brent_find_minima([&](Real c2) { return solve(c2, nullptr); },
                                                     best / 1.15, best * 1.15, 40);
    RVec coef;
    Real c2 = res.second < fbest ? res.first : best;
    solve(c2, &coef);
    r.C = std::exp(coef[0]);
    r.c1 = coef[1];
    r.c2 = c2;
    for (int i = 0; i < n; ++i) {
        Real fit = std::exp(coef[0] + coef[1] * std::exp(c2 * t[i]));
        r.max_rel_misfit = std::max(r.max_rel_misfit, std::abs(fit - (N[i] + 1)) / (N[i] + 1));
    }
    r.finite = std::isfinite(r.C) && std::isfinite(r.c1) && std::isfinite(r.c2);
    return r;
}

}  // namespace qf
