#ifndef QFLUCT_KERNELS_HPP
#define QFLUCT_KERNELS_HPP

#include <array>
#include <functional>
#include <vector>

#include "qfluct/fields.hpp"
#include "qfluct/grid.hpp"
#include "qfluct/scattering.hpp"

namespace qf {

// Dense two-point kernel K(x_i, x_j).  op() is the matrix of the integral
// operator, w * entries, so composition is a plain product and the HS norm
// is its Frobenius norm.
struct HSKernel {
    Grid grid;
    CMat entries;
    Real weight = 1.0;
    bool symmetric = false;

    CMat op() const { return weight * entries; }
    Real hs() const { return weight * entries.norm(); }
    int size() const { return static_cast<int>(entries.rows()); }

    static HSKernel from_op(const Grid& g, const CMat& op, bool symmetric);
    static HSKernel zero(const Grid& g);
    static HSKernel identity(const Grid& g);
};

constexpr int kMaxKernelModes = 4096;

// Radial profile of the correlation kernel: value at r > 0 and the average
// over the ball of radius h (used on the diagonal).
struct RadialProfile {
    std::function<Real(Real)> value;
    std::function<Real(Real)> ball_average;
    std::function<Real(Real)> derivative;
    // int_{|x| < h} |value'|^2 dx, for the core-resolved gradient norm
    std::function<Real(Real)> ball_grad_sq;
    // int_{|x| < h} value^2 dx
    std::function<Real(Real)> ball_sq;
    Real support;
};

RadialProfile scattering_profile(const RadialScattering& scat);  // N omega_{N,ell}
RadialProfile asymptotic_profile(Real b0, Real ell);            // omega_ell^asymp

// Midpoint values phi((x_i + x_j)/2) along the shortest periodic segment,
// returned as the refined field and looked up by index pairs.
struct Midpoints {
    Grid grid;
    CVec refined;
    Complex at(int i, int j) const;
};
Midpoints midpoints(const GridField& phi);

// Minimal-image separation components (in grid units) and distance.
std::array<int, 3> min_image(const Grid& g, int i, int j);

// entries(i,j) = -P(|x_i - x_j|) m(i,j) with m symmetric in (i,j); the
// diagonal uses the ball average of P over radius dx/2.
HSKernel build_profile_kernel(const RadialProfile& prof, const Grid& g, const std::function<Complex(int, int)>& m);
HSKernel build_kernel(const RadialProfile& prof, const GridField& phi);
HSKernel build_k_N(const RadialScattering& scat, const GridField& phi, Real N);
HSKernel build_k_limit(Real b0, Real ell, const GridField& phi);
// kdot = -profile(x-y) * 2 phi(m) phidot(m)
HSKernel build_kdot(const RadialProfile& prof, const GridField& phi, const GridField& phidot);

struct Hyperbolic {
    HSKernel c, s, p, r;
};
Hyperbolic hyperbolic(const HSKernel& k);
// Truncated series sum (k kbar)^n/(2n)! and sum (k kbar)^n k/(2n+1)!.
Hyperbolic hyperbolic_series(const HSKernel& k, int terms);

Real verify_bogoliubov_identity(const HSKernel& c, const HSKernel& s);

struct KernelNorms {
    Real hs = 0;
    Real sup_row = 0;
    Real sup_entry = 0;
};
KernelNorms kernel_norms(const HSKernel& k);

struct DerivativeKernels {
    std::array<HSKernel, 3> grad1_k;  // components beyond dim are zero kernels
    std::array<HSKernel, 3> grad1_p;
    HSKernel lap1_p;                  // -Laplacian along the first argument
    HSKernel lap1_r;
    Real grad1_k_hs = 0;              // grid HS norm of the vector kernel
    Real grad1_k_hs_resolved = 0;     // adds the singular core of each diagonal cell
    Real grad1_p_hs = 0;
};

DerivativeKernels derivative_kernels(const RadialProfile& prof, const GridField& phi, const Hyperbolic& h);
DerivativeKernels derivative_kernels(const RadialScattering& scat, const GridField& phi, Real N);

Real kernel_distance(const HSKernel& a, const HSKernel& b);

// HS distance of k_{N,t} and k_t with each diagonal cell integrated against
// the exact radial profiles instead of its cell average.  The grid distance
// misses the singular core |x-y| < N^-b, which carries the slowest rate.
Real kernel_distance_resolved(const HSKernel& kN, const HSKernel& kL, const RadialScattering& scat, Real b0,
                              const GridField& phiN, const GridField& phi);

Real ball_moment(const RadialScattering& s, Real h, const std::function<Real(Real)>& g);

}  // namespace qf

#endif  // QFLUCT_KERNELS_HPP
