#ifndef QFLUCT_FIELDS_HPP
#define QFLUCT_FIELDS_HPP

#include <functional>
#include <string>
#include <vector>

#include "qfluct/grid.hpp"
#include "qfluct/scattering.hpp"

namespace qf {

// Nonlinearity of either flow: Hartree (W_N * |phi|^2) phi through the exact
// Fourier multiplier of W_N, or the local cubic term b0 |phi|^2 phi.
struct Nonlinearity {
    enum Kind { Hartree, Cubic } kind = Cubic;
    Real b0 = 0.0;
    RVec multiplier;  // W^_N(k) on the grid, Hartree only

    std::string name() const { return kind == Hartree ? "hartree" : "nls"; }
};

Nonlinearity cubic_nonlinearity(Real b0);
// W^_N(p) = 4 pi int s^2 V(s) f(s N^-b) sinc(p s N^-b) ds, cached per |p|^2.
Nonlinearity hartree_nonlinearity(const Grid& g, const PotentialSpec& V, const RadialScattering& scat);
// V^_N(p) = V^(p N^-b), the unscaled potential's radial transform.
RVec potential_multiplier(const Grid& g, const PotentialSpec& V, Real N, Real beta);

// Rejects N outside the admissible range: R N^-b < ell <= L/2.
void check_admissible(const Grid& g, const PotentialSpec& V, Real N, Real beta, Real ell);
// Admissible N are those strictly above this value.
Real min_admissible_N(const PotentialSpec& V, Real beta, Real ell);

Real l2_norm(const GridField& a);
Real l2_distance(const GridField& a, const GridField& b);
Real sobolev_norm(const GridField& a, int n);
Real energy(const GridField& a, const Nonlinearity& nl);
// Fraction of mass within L/4 of the box boundary (diagnostic).
Real boundary_mass(const GridField& a);

CVec interaction_potential(const GridField& phi, const Nonlinearity& nl);
GridField time_derivative(const GridField& phi, const Nonlinearity& nl);

struct FieldSample {
    Real t;
    Real mass;
    Real energy;
    Real h1;
    Real h2;
};

// Strang split-step evolution.  `sample_times` (sorted, within [0, t_final])
// collects snapshots; each is aligned to the nearest step.
struct Evolution {
    GridField final;
    std::vector<GridField> snapshots;
    std::vector<FieldSample> series;
};

Evolution evolve(const GridField& phi0, const Nonlinearity& nl, Real t_final, Real dt,
                 const std::vector<Real>& sample_times = {}, int series_every = 0, Real max_drift = 1e-4);

GridField evolve_hartree_N(const GridField& phi0, const PotentialSpec& V, const RadialScattering& scat,
                           Real t_final, Real dt);
GridField evolve_nls(const GridField& phi0, Real b0, Real t_final, Real dt);

}  // namespace qf

#endif  // QFLUCT_FIELDS_HPP
