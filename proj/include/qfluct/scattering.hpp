#ifndef QFLUCT_SCATTERING_HPP
#define QFLUCT_SCATTERING_HPP

#include <functional>
#include <string>
#include <vector>

#include "qfluct/types.hpp"

namespace qf {

struct PotentialSpec {
    std::string name;
    std::function<Real(Real)> profile;
    Real R = 0.0;   // support radius
    Real b0 = 0.0;  // int V dx, filled by make_potential

    Real operator()(Real r) const { return r > R ? 0.0 : profile(r); }
    bool is_zero() const { return R <= 0.0 || b0 == 0.0; }
};

PotentialSpec square_well(Real V0, Real R);
PotentialSpec parabolic_well(Real V0, Real R);  // V0 (1 - (r/R)^2) on r <= R
PotentialSpec zero_potential();
// Wraps an arbitrary profile, validates it and caches b0.
PotentialSpec make_potential(std::string name, std::function<Real(Real)> profile, Real R);

Real integrate_b0(const PotentialSpec& V);

// 4 pi int_0^R s^2 g(s) sin(p s)/(p s) ds for a radial function g.
Real radial_fourier(const std::function<Real(Real)>& g, Real R, Real p);

struct RadialScattering {
    std::vector<Real> r;   // strictly increasing in (0, ell]
    std::vector<Real> f;   // f_{N,ell}(r)
    std::vector<Real> fp;  // d f / d r
    Real f_origin = 1.0;   // limit of f at r -> 0
    Real lambda = 0.0;
    Real ell = 1.0;
    Real N = 1.0;
    Real beta = 0.5;
    Real core = 0.0;  // R N^-beta

    // 1 - f, extended by zero for r >= ell
    Real omega(Real r) const;
    Real omega_prime(Real r) const;
    Real f_at(Real r) const;
};

RadialScattering solve_neumann(const PotentialSpec& V, Real N, Real beta, Real ell, int n_grid);

Real omega_asymp(Real b0, Real ell, Real r);
Real omega_asymp_prime(Real b0, Real ell, Real r);

struct BoundReport {
    Real c0 = 1.0;
    Real C_lambda = 0.0;
    Real C_omega = 0.0;
    Real C_grad = 0.0;
    Real f_max = 1.0;
};

BoundReport check_pointwise_bounds(const RadialScattering& sol, Real b0);

Real scattering_length(const PotentialSpec& V, Real domain_radius, int n_grid);

Real omega_difference_bound(const RadialScattering& sol, Real b0);

}  // namespace qf

#endif  // QFLUCT_SCATTERING_HPP
