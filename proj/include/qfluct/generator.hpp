#ifndef QFLUCT_GENERATOR_HPP
#define QFLUCT_GENERATOR_HPP

#include <vector>

#include "qfluct/fields.hpp"
#include "qfluct/kernels.hpp"

namespace qf {

// H = sum A_ij a*_i a_j + 1/2 sum (B_ij a*_i a*_j + h.c.) + phase + eta
// in the mode basis a_i = sqrt(w) a(x_i).
struct QuadGenerator {
    CMat A;
    CMat B;
    Real phase = 0.0;       // normal-ordering constants
    Real eta = 0.0;         // eta_N(t), kept apart from the operator content
    Real phase_imag = 0.0;  // largest imaginary residue met while forming phase
    Real eta_imag = 0.0;
    Real truncation_residual = 0.0;
    Real weight = 1.0;
    Real t = 0.0;

    int size() const { return static_cast<int>(A.rows()); }
    static QuadGenerator zero(int M, Real weight);
    QuadGenerator& operator+=(const QuadGenerator& o);
};

void check_generator(const QuadGenerator& g, Real rel_tol = 1e-10);

// Collects a*a*, a*a, a a*, a a terms built from smeared operators.  Each
// operator a^#(g_x) is described by the matrix whose column x is w g_x.
class QuadAccumulator {
public:
    explicit QuadAccumulator(int M);

    // int int Mid(x,y) a*(g_x) a*(g'_y) and friends.  Mid is w*kernel for a
    // double integral and diag(h) for a single one; nullptr stands for the
    // identity (a bare a_x, or h = 1).
    void cc(const CMat* G, const CMat* Mid, const CMat* G2);
    void ca(const CMat* G, const CMat* Mid, const CMat* G2);
    void ac(const CMat* G, const CMat* Mid, const CMat* G2);
    void aa(const CMat* G, const CMat* Mid, const CMat* G2);
    void add_R(const CMat& X) { R_ += X; }
    void add_P(const CMat& X) { P_ += X; }
    void add_Q(const CMat& X) { Q_ += X; }
    void add_constant(Complex c) { c_ += c; }

    // A = R, B = P + P^T; Q + Q^T must equal conj(B).
    QuadGenerator finish(Real weight) const;

private:
    CMat R_, P_, Q_;
    Complex c_{0.0, 0.0};
};

struct ADSeriesTerm {
    int n = 0;
    HSKernel f1;
    HSKernel f2;
    bool even = true;
};

struct ADSeries {
    std::vector<ADSeriesTerm> terms;
    QuadGenerator generator;  // i sum (-1)^{n+1}/(n+1)! ad_B^n(Bdot)
    Complex phase_contribution{0.0, 0.0};
    Real residual = 0.0;      // bound on the discarded tail
};

ADSeries ad_series(const HSKernel& k, const HSKernel& kdot, Real tol = 1e-10, int n_max = 40);

struct KernelFamily {
    HSKernel k;
    Hyperbolic h;
};

// Operator-level ingredients for one time slice.
struct SliceInputs {
    GridField phi;
    GridField phidot;
    RadialProfile profile;   // N omega_{N,l} or omega_l^asymp
    Real lambda_coef = 0.0;  // N lambda_{N,l} or 3 b0/(8 pi l^3)
    Real ell = 1.0;
    RVec vhat;               // Fourier multiplier of the pair potential in L^(V)
};

QuadGenerator assemble_LK(const KernelFamily& kf, const DerivativeKernels& dk);
QuadGenerator assemble_LV(const GridField& phi, const KernelFamily& kf, const RVec& vhat);
QuadGenerator assemble_corrections(const RadialProfile& prof, Real lambda_coef, Real ell, const GridField& phi);

// wN_hat: Fourier multiplier of W_N = V_N f_{N,l}; vhat that of V_N.
Complex eta_N_complex(const GridField& phi, const KernelFamily& kf, const RVec& vhat, const RVec& wN_hat, Real N);
Real eta_N(const GridField& phi, const KernelFamily& kf, const RVec& vhat, const RVec& wN_hat, Real N);

struct GeneratorOptions {
    Real series_tol = 1e-10;
    int series_max = 40;
};

QuadGenerator assemble_slice(const SliceInputs& in, const GeneratorOptions& opt = {});

QuadGenerator assemble_L2N(const PotentialSpec& V, const RadialScattering& scat, const GridField& phi,
                           const GridField& phidot, const GeneratorOptions& opt = {});
QuadGenerator assemble_L2inf(const PotentialSpec& V, Real ell, const GridField& phi, const GridField& phidot,
                             const GeneratorOptions& opt = {});

}  // namespace qf

#endif  // QFLUCT_GENERATOR_HPP
