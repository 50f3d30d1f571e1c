#include "qfluct/scattering.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qf {

const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Resolution: return "resolution";
        case ErrorKind::InvalidPotential: return "invalid-potential";
        case ErrorKind::Convergence: return "solver-convergence";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Assembly: return "assembly";
        case ErrorKind::Truncation: return "truncation";
        case ErrorKind::Diverged: return "integration-diverged";
    }
    return "unknown";
}

namespace {

Real adaptive(const std::function<Real(Real)>& g, Real a, Real b) {
    if (b <= a) return 0.0;
    Real err = 0.0;
    return boost::math::quadrature::gauss_kronrod<Real, 61>::integrate(g, a, b, 25, 1e-13, &err);
}

}  // namespace

PotentialSpec make_potential(std::string name, std::function<Real(Real)> profile, Real R) {
    if (!(R >= 0.0) || !std::isfinite(R))
        throw Error(ErrorKind::InvalidPotential, "support radius must be finite and non-negative");
    PotentialSpec V;
    V.name = std::move(name);
    V.profile = std::move(profile);
    V.R = R;
    for (int i = 0; i <= 64 && R > 0.0; ++i) {
        Real v = V.profile(R * i / 64.0);
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidPotential, "non-finite potential value");
        if (v < 0.0) throw Error(ErrorKind::InvalidPotential, "potential must be non-negative");
    }
    V.b0 = integrate_b0(V);
    return V;
}

PotentialSpec square_well(Real V0, Real R) {
    return make_potential("square_well", [V0](Real) { return V0; }, R);
}

PotentialSpec parabolic_well(Real V0, Real R) {
    return make_potential("parabolic", [V0, R](Real r) { return V0 * (1.0 - (r / R) * (r / R)); }, R);
}

PotentialSpec zero_potential() {
    return make_potential("zero", [](Real) { return 0.0; }, 0.0);
}

Real integrate_b0(const PotentialSpec& V) {
    if (V.R <= 0.0) return 0.0;
    bool bad = false;
    auto g = [&](Real r) {
        Real v = V.profile(r);
        if (!std::isfinite(v)) bad = true;
        return r * r * v;
    };
    Real I = adaptive(g, 0.0, V.R);
    if (bad || !std::isfinite(I)) throw Error(ErrorKind::InvalidPotential, "non-finite potential value");
    return 4.0 * kPi * I;
}

Real radial_fourier(const std::function<Real(Real)>& g, Real R, Real p) {
    if (R <= 0.0) return 0.0;
    auto h = [&](Real s) {
        Real x = p * s;
        Real sinc = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        return s * s * g(s) * sinc;
    };
    return 4.0 * kPi * adaptive(h, 0.0, R);
}

namespace {

struct Shot {
    std::vector<Real> u, up;
};

// RK4 for u'' = (U(r) - lambda) u from u(0)=0, u'(0)=1 over the given nodes.
// U is evaluated strictly inside each interval so a jump at a node is handled one-sidedly.
Shot shoot(const std::vector<Real>& nodes, const std::function<Real(Real)>& U, Real lambda) {
    Shot s;
    s.u.resize(nodes.size());
    s.up.resize(nodes.size());
    Real u = 0.0, up = 1.0, r0 = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        Real r1 = nodes[k], h = r1 - r0;
        Real ua = U(r0 + 1e-9 * h) - lambda;
        Real um = U(r0 + 0.5 * h) - lambda;
        Real ub = U(r1 - 1e-9 * h) - lambda;
        Real k1u = up, k1p = ua * u;
        Real k2u = up + 0.5 * h * k1p, k2p = um * (u + 0.5 * h * k1u);
        Real k3u = up + 0.5 * h * k2p, k3p = um * (u + 0.5 * h * k2u);
        Real k4u = up + h * k3p, k4p = ub * (u + h * k3u);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        up += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        s.u[k] = u;
        s.up[k] = up;
        r0 = r1;
    }
    return s;
}

Real hermite(Real r0, Real r1, Real f0, Real f1, Real d0, Real d1, Real r, bool deriv) {
    Real h = r1 - r0, t = (r - r0) / h;
    Real t2 = t * t, t3 = t2 * t;
    if (!deriv) {
        return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
               (t3 - t2) * h * d1;
    }
    return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * f1 +
            (3 * t2 - 2 * t) * h * d1) / h;
}

}  // namespace

Real RadialScattering::f_at(Real r) const {
    if (r >= ell || this->r.empty()) return 1.0;
    auto it = std::upper_bound(this->r.begin(), this->r.end(), r);
    if (it == this->r.begin()) return hermite(0.0, this->r[0], f_origin, f[0], 0.0, fp[0], r, false);
    std::size_t k = it - this->r.begin();
    if (k >= this->r.size()) return f.back();
    return hermite(this->r[k - 1], this->r[k], f[k - 1], f[k], fp[k - 1], fp[k], r, false);
}

Real RadialScattering::omega(Real r) const { return r >= ell ? 0.0 : 1.0 - f_at(r); }

Real RadialScattering::omega_prime(Real r) const {
    if (r >= ell || this->r.empty()) return 0.0;
    auto it = std::upper_bound(this->r.begin(), this->r.end(), r);
    if (it == this->r.begin()) return -hermite(0.0, this->r[0], f_origin, f[0], 0.0, fp[0], r, true);
    std::size_t k = it - this->r.begin();
    if (k >= this->r.size()) return -fp.back();
    return -hermite(this->r[k - 1], this->r[k], f[k - 1], f[k], fp[k - 1], fp[k], r, true);
}

RadialScattering solve_neumann(const PotentialSpec& V, Real N, Real beta, Real ell, int n_grid) {
    if (!(N >= 1.0) || !(beta > 0.0 && beta < 1.0) || !(ell > 0.0))
        throw Error(ErrorKind::Validation, "solve_neumann: need N >= 1, 0 < beta < 1, ell > 0");
    RadialScattering sol;
    sol.N = N;
    sol.beta = beta;
    sol.ell = ell;
    Real scale = std::pow(N, -beta);
    sol.core = V.R * scale;

    if (V.is_zero()) {
        sol.core = 0.0;
        for (int k = 1; k <= std::max(n_grid, 2); ++k) {
            sol.r.push_back(ell * k / std::max(n_grid, 2));
            sol.f.push_back(1.0);
            sol.fp.push_back(0.0);
        }
        return sol;
    }
    if (sol.core >= ell)
        throw Error(ErrorKind::Resolution, "solve_neumann: R N^-beta must be < ell");
    int n_in = n_grid / 2, n_out = n_grid - n_in;
    if (n_in < 8) throw Error(ErrorKind::Resolution, "solve_neumann: fewer than 8 points inside the support");

    std::vector<Real> nodes;
    nodes.reserve(n_grid);
    for (int k = 1; k <= n_in; ++k) nodes.push_back(sol.core * k / n_in);
    Real q = std::pow(ell / sol.core, 1.0 / n_out);
    for (int k = 1; k < n_out; ++k) nodes.push_back(sol.core * std::pow(q, k));
    nodes.push_back(ell);

    Real amp = 0.5 * std::pow(N, 3 * beta - 1);
    auto U = [&](Real r) { return amp * V(r / scale); };
    auto residual = [&](const Shot& s) { return s.up.back() - s.u.back() / ell; };

    Real lo = 0.0;
    Real hi = 3.0 * V.b0 / (8.0 * kPi * N * ell * ell * ell) * (1.0 + 1e-6);
    Shot slo = shoot(nodes, U, lo), shi = shoot(nodes, U, hi);
    Real glo = residual(slo), ghi = residual(shi);
    if (!(glo > 0.0) || !(ghi < 0.0))
        throw Error(ErrorKind::Convergence, "solve_neumann: eigenvalue bracket failure");
    Shot mid;
    for (int it = 0; it < 200; ++it) {
        Real m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi) break;
        mid = shoot(nodes, U, m);
        Real gm = residual(mid);
        if (gm > 0.0) lo = m; else hi = m;
        if (hi - lo <= 1e-15 * hi) break;
    }
    sol.lambda = 0.5 * (lo + hi);
    Shot s = shoot(nodes, U, sol.lambda);
    if (std::abs(residual(s)) > 1e-8 * std::max(1.0, std::abs(s.up.back())))
        throw Error(ErrorKind::Convergence, "solve_neumann: boundary residual did not converge");

    Real c = s.u.back() / ell;
    sol.r = nodes;
    sol.f.resize(nodes.size());
    sol.fp.resize(nodes.size());
    sol.f_origin = 1.0 / c;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        Real r = nodes[k];
        if (s.u[k] <= 0.0) throw Error(ErrorKind::Convergence, "solve_neumann: solution has a node");
        sol.f[k] = s.u[k] / (c * r);
        sol.fp[k] = (s.up[k] * r - s.u[k]) / (c * r * r);
    }
    sol.f.back() = 1.0;
    sol.fp.back() = 0.0;
    return sol;
}

Real omega_asymp(Real b0, Real ell, Real r) {
    if (r == 0.0) throw Error(ErrorKind::Numeric, "omega_asymp: singular at r = 0");
    if (r > ell) return 0.0;
    return b0 / (8.0 * kPi) * (1.0 / r - 1.5 / ell + r * r / (2.0 * ell * ell * ell));
}

Real omega_asymp_prime(Real b0, Real ell, Real r) {
    if (r == 0.0) throw Error(ErrorKind::Numeric, "omega_asymp: singular at r = 0");
    if (r > ell) return 0.0;
    return b0 / (8.0 * kPi) * (-1.0 / (r * r) + r / (ell * ell * ell));
}

BoundReport check_pointwise_bounds(const RadialScattering& sol, Real b0) {
    BoundReport rep;
    Real N = sol.N, s = std::pow(N, -sol.beta);
    rep.C_lambda = std::pow(N, 2 - sol.beta) *
                   std::abs(sol.lambda - 3 * b0 / (8 * kPi * N * sol.ell * sol.ell * sol.ell));
    rep.c0 = sol.f_origin;
    rep.f_max = sol.f_origin;
    rep.C_omega = N * s * (1.0 - sol.f_origin);
    for (std::size_t k = 0; k < sol.r.size(); ++k) {
        Real r = sol.r[k], w = 1.0 - sol.f[k];
        rep.c0 = std::min(rep.c0, sol.f[k]);
        rep.f_max = std::max(rep.f_max, sol.f[k]);
        rep.C_omega = std::max(rep.C_omega, N * (r + s) * w);
        rep.C_grad = std::max(rep.C_grad, N * (r * r + s * s) * std::abs(sol.fp[k]));
    }
    return rep;
}

Real scattering_length(const PotentialSpec& V, Real domain_radius, int n_grid) {
    if (V.is_zero()) return 0.0;
    if (domain_radius < 10.0 * V.R)
        throw Error(ErrorKind::Validation, "scattering_length: domain_radius must be >= 10 R");
    if (n_grid < 16) throw Error(ErrorKind::Resolution, "scattering_length: n_grid too small");
    int n_in = n_grid / 2, n_out = n_grid - n_in;
    std::vector<Real> nodes;
    for (int k = 1; k <= n_in; ++k) nodes.push_back(V.R * k / n_in);
    for (int k = 1; k <= n_out; ++k) nodes.push_back(V.R + (domain_radius - V.R) * k / n_out);
    Shot s = shoot(nodes, [&](Real r) { return 0.5 * V(r); }, 0.0);
    // beyond R the zero-energy solution is u = A (r - a0)
    Real r = nodes.back();
    return r - s.u.back() / s.up.back();
}

Real omega_difference_bound(const RadialScattering& sol, Real b0) {
    Real sup = 0.0;
    Real pref = std::pow(sol.N, 1 - sol.beta);
    for (std::size_t k = 0; k < sol.r.size(); ++k) {
        Real r = sol.r[k];
        if (r <= sol.core) continue;
        Real d = std::abs(sol.N * (1.0 - sol.f[k]) - omega_asymp(b0, sol.ell, r));
        sup = std::max(sup, pref * r * d);
    }
    return sup;
}

}  // namespace qf
