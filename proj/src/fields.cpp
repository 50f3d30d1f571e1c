#include "qfluct/fields.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace qf {

namespace {

// Integer |m|^2 labels each distinct |p| on the grid.
long mode_norm2(const Grid& g, int i) {
    auto c = grid_coords(g, i);
    long s = 0;
    for (int d = 0; d < g.dim; ++d) {
        long m = c[d] >= g.G / 2 ? c[d] - g.G : c[d];
        s += m * m;
    }
    return s;
}

RVec radial_multiplier(const Grid& g, const std::function<Real(long)>& value) {
    std::map<long, Real> cache;
    RVec out(g.M());
    for (int i = 0; i < g.M(); ++i) {
        long key = mode_norm2(g, i);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, value(key)).first;
        out[i] = it->second;
    }
    return out;
}

}  // namespace

Nonlinearity cubic_nonlinearity(Real b0) {
    Nonlinearity nl;
    nl.kind = Nonlinearity::Cubic;
    nl.b0 = b0;
    return nl;
}

Nonlinearity hartree_nonlinearity(const Grid& g, const PotentialSpec& V, const RadialScattering& scat) {
    Nonlinearity nl;
    nl.kind = Nonlinearity::Hartree;
    nl.b0 = V.b0;
    Real s = std::pow(scat.N, -scat.beta);
    Real k0 = 2 * kPi / g.L;
    auto prof = [&](Real x) { return V(x) * scat.f_at(x * s); };
    nl.multiplier = radial_multiplier(g, [&](long m2) {
        return radial_fourier(prof, V.R, k0 * std::sqrt(static_cast<Real>(m2)) * s);
    });
    return nl;
}

RVec potential_multiplier(const Grid& g, const PotentialSpec& V, Real N, Real beta) {
    Real s = std::pow(N, -beta);
    Real k0 = 2 * kPi / g.L;
    std::function<Real(Real)> prof = [&](Real x) { return V(x); };
    return radial_multiplier(g, [&](long m2) {
        return radial_fourier(prof, V.R, k0 * std::sqrt(static_cast<Real>(m2)) * s);
    });
}

Real min_admissible_N(const PotentialSpec& V, Real beta, Real ell) {
    if (V.is_zero()) return 0.0;
    return std::pow(V.R / ell, 1.0 / beta);
}

void check_admissible(const Grid& g, const PotentialSpec& V, Real N, Real beta, Real ell) {
    if (ell > 0.5 * g.L + 1e-12) {
        std::ostringstream os;
        os << "ell = " << ell << " exceeds L/2 = " << 0.5 * g.L;
        throw Error(ErrorKind::Resolution, os.str());
    }
    if (!V.is_zero() && !(N > min_admissible_N(V, beta, ell))) {
        std::ostringstream os;
        os << "N = " << N << " not admissible: need R N^-beta < ell, i.e. N > " << min_admissible_N(V, beta, ell);
        throw Error(ErrorKind::Resolution, os.str());
    }
}

Real l2_norm(const GridField& a) { return std::sqrt(a.grid.weight()) * a.values.norm(); }

Real l2_distance(const GridField& a, const GridField& b) {
    if (!(a.grid == b.grid)) throw Error(ErrorKind::Contract, "l2_distance: grid mismatch");
    return std::sqrt(a.grid.weight()) * (a.values - b.values).norm();
}

Real sobolev_norm(const GridField& a, int n) {
    if (n < 0 || n > 4) throw Error(ErrorKind::Validation, "sobolev_norm: n must be in [0, 4]");
    const Grid& g = a.grid;
    CVec h = fft_forward(g, a.values);
    RVec k2 = wavenumber_sq(g);
    Real s = 0;
    for (int i = 0; i < g.M(); ++i) s += std::pow(1 + k2[i], n) * std::norm(h[i]);
    return std::sqrt(g.weight() / g.M() * s);
}

CVec interaction_potential(const GridField& phi, const Nonlinearity& nl) {
    const Grid& g = phi.grid;
    RVec rho = phi.values.cwiseAbs2();
    if (nl.kind == Nonlinearity::Cubic) return (nl.b0 * rho).cast<Complex>();
    return apply_multiplier(g, nl.multiplier, rho.cast<Complex>()).real().cast<Complex>();
}

Real energy(const GridField& a, const Nonlinearity& nl) {
    const Grid& g = a.grid;
    CVec h = fft_forward(g, a.values);
    RVec k2 = wavenumber_sq(g);
    Real kin = 0;
    for (int i = 0; i < g.M(); ++i) kin += k2[i] * std::norm(h[i]);
    kin *= g.weight() / g.M();
    RVec rho = a.values.cwiseAbs2();
    CVec U = interaction_potential(a, nl);
    Real pot = 0;
    for (int i = 0; i < g.M(); ++i) pot += U[i].real() * rho[i];
    return kin + 0.5 * g.weight() * pot;
}

Real boundary_mass(const GridField& a) {
    const Grid& g = a.grid;
    Real s = 0;
    for (int i = 0; i < g.M(); ++i) {
        auto c = grid_coords(g, i);
        bool edge = false;
        for (int d = 0; d < g.dim; ++d) {
            Real x = c[d] * g.dx();
            if (x < 0.25 * g.L || x >= 0.75 * g.L) edge = true;
        }
        if (edge) s += std::norm(a.values[i]);
    }
    return s * g.weight();
}

GridField time_derivative(const GridField& phi, const Nonlinearity& nl) {
    const Grid& g = phi.grid;
    CVec lap = apply_multiplier(g, wavenumber_sq(g), phi.values);  // -Laplacian phi
    CVec U = interaction_potential(phi, nl);
    GridField out{g, CVec(g.M())};
    out.values = Complex(0, -1) * (lap + U.cwiseProduct(phi.values));
    return out;
}

Evolution evolve(const GridField& phi0, const Nonlinearity& nl, Real t_final, Real dt,
                 const std::vector<Real>& sample_times, int series_every, Real max_drift) {
    const Grid& g = phi0.grid;
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw Error(ErrorKind::Validation, "evolve: need dt > 0, t >= 0");
    long n = std::max<long>(1, std::lround(t_final / dt));
    if (t_final == 0.0) n = 0;
    Real h = n > 0 ? t_final / n : 0.0;

    RVec k2 = wavenumber_sq(g);
    CVec half(g.M());
    for (int i = 0; i < g.M(); ++i) half[i] = std::polar(1.0, -0.5 * h * k2[i]);

    Evolution ev;
    GridField phi = phi0;
    std::size_t next_sample = 0;
    auto take_samples = [&](long step) {
        while (next_sample < sample_times.size() &&
               std::lround(sample_times[next_sample] / (h > 0 ? h : 1.0)) <= step) {
            ev.snapshots.push_back(phi);
            ++next_sample;
        }
    };
    auto record = [&](long step) {
        ev.series.push_back({step * h, l2_norm(phi), energy(phi, nl), sobolev_norm(phi, 1), sobolev_norm(phi, 2)});
    };
    Real E0 = energy(phi, nl);
    take_samples(0);
    if (series_every > 0) record(0);
    for (long s = 1; s <= n; ++s) {
        CVec y = fft_forward(g, phi.values);
        y.array() *= half.array();
        phi.values = fft_inverse(g, y);
        CVec U = interaction_potential(phi, nl);
        for (int i = 0; i < g.M(); ++i) phi.values[i] *= std::polar(1.0, -h * U[i].real());
        y = fft_forward(g, phi.values);
        y.array() *= half.array();
        phi.values = fft_inverse(g, y);
        take_samples(s);
        if (series_every > 0 && (s % series_every == 0 || s == n)) record(s);
    }
    while (next_sample < sample_times.size()) {
        ev.snapshots.push_back(phi);
        ++next_sample;
    }
    Real E1 = energy(phi, nl);
    if (std::abs(E1 - E0) > max_drift * std::max(1.0, std::abs(E0))) {
        std::ostringstream os;
        os << "evolve: relative energy drift " << std::abs(E1 - E0) / std::max(1.0, std::abs(E0)) << " above " << max_drift
           << ", step size too large";
        throw Error(ErrorKind::Numeric, os.str());
    }
    ev.final = phi;
    return ev;
}

namespace {

void check_unit_mass(const GridField& phi0) {
    if (std::abs(l2_norm(phi0) - 1.0) > 1e-9)
        throw Error(ErrorKind::Validation, "initial field must have unit L2 norm");
}

}  // namespace

GridField evolve_hartree_N(const GridField& phi0, const PotentialSpec& V, const RadialScattering& scat,
                           Real t_final, Real dt) {
    check_unit_mass(phi0);
    check_admissible(phi0.grid, V, scat.N, scat.beta, scat.ell);
    return evolve(phi0, hartree_nonlinearity(phi0.grid, V, scat), t_final, dt).final;
}

GridField evolve_nls(const GridField& phi0, Real b0, Real t_final, Real dt) {
    check_unit_mass(phi0);
    return evolve(phi0, cubic_nonlinearity(b0), t_final, dt).final;
}

}  // namespace qf
