#include "qfluct/generator.hpp"

#include <cmath>
#include <sstream>

namespace qf {

namespace {

const Complex I1(0.0, 1.0);

CMat cplx(const RMat& m) { return m.cast<Complex>(); }

enum class Op { Plain, Transpose, Adjoint };

// a * b * op(c), nullptr meaning identity
CMat chain(const CMat* a, const CMat* b, const CMat* c, Op op, int M) {
    CMat left;
    if (a && b) left.noalias() = (*a) * (*b);
    else if (a || b) left = a ? *a : *b;
    if (!c) return (a || b) ? left : CMat(CMat::Identity(M, M));
    if (!a && !b) return op == Op::Transpose ? CMat(c->transpose()) : CMat(c->adjoint());
    CMat out(M, M);
    if (op == Op::Transpose) out.noalias() = left * c->transpose();
    else out.noalias() = left * c->adjoint();
    return out;
}

}  // namespace

QuadGenerator QuadGenerator::zero(int M, Real weight) {
    QuadGenerator g;
    g.A = CMat::Zero(M, M);
    g.B = CMat::Zero(M, M);
    g.weight = weight;
    return g;
}

QuadGenerator& QuadGenerator::operator+=(const QuadGenerator& o) {
    A += o.A;
    B += o.B;
    phase += o.phase;
    eta += o.eta;
    phase_imag = std::max(phase_imag, o.phase_imag);
    eta_imag = std::max(eta_imag, o.eta_imag);
    truncation_residual += o.truncation_residual;
    return *this;
}

void check_generator(const QuadGenerator& g, Real rel_tol) {
    Real scale = std::max({1.0, g.A.norm(), g.B.norm()});
    if (hermitian_defect(g.A) > rel_tol * scale) throw Error(ErrorKind::Assembly, "generator: A is not Hermitian");
    if (symmetric_defect(g.B) > rel_tol * scale) throw Error(ErrorKind::Assembly, "generator: B is not symmetric");
    if (!std::isfinite(g.phase) || !std::isfinite(g.eta))
        throw Error(ErrorKind::Assembly, "generator: non-finite phase");
}

QuadAccumulator::QuadAccumulator(int M)
    : R_(CMat::Zero(M, M)), P_(CMat::Zero(M, M)), Q_(CMat::Zero(M, M)) {}

void QuadAccumulator::cc(const CMat* G, const CMat* Mid, const CMat* G2) {
    P_ += chain(G, Mid, G2, Op::Transpose, R_.rows());
}

void QuadAccumulator::ca(const CMat* G, const CMat* Mid, const CMat* G2) {
    R_ += chain(G, Mid, G2, Op::Adjoint, R_.rows());
}

void QuadAccumulator::ac(const CMat* G, const CMat* Mid, const CMat* G2) {
    CMat Gc;
    if (G) Gc = G->conjugate();
    CMat X = chain(G ? &Gc : nullptr, Mid, G2, Op::Transpose, R_.rows());
    // a_i a*_j = a*_j a_i + delta_ij
    R_ += X.transpose();
    c_ += X.trace();
}

void QuadAccumulator::aa(const CMat* G, const CMat* Mid, const CMat* G2) {
    CMat Gc;
    if (G) Gc = G->conjugate();
    Q_ += chain(G ? &Gc : nullptr, Mid, G2, Op::Adjoint, R_.rows());
}

QuadGenerator QuadAccumulator::finish(Real weight) const {
    QuadGenerator g;
    g.weight = weight;
    g.A = R_;
    g.B = P_ + P_.transpose();
    CMat Bq = Q_ + Q_.transpose();
    Real scale = std::max({1.0, g.A.norm(), g.B.norm()});
    if ((g.B.conjugate() - Bq).norm() > 1e-10 * scale)
        throw Error(ErrorKind::Assembly, "generator: aa block is not the conjugate of the a*a* block");
    check_generator(g);
    g.A = (0.5 * (g.A + g.A.adjoint())).eval();
    g.phase = c_.real();
    g.phase_imag = std::abs(c_.imag());
    return g;
}

ADSeries ad_series(const HSKernel& k, const HSKernel& kdot, Real tol, int n_max) {
    if (!k.symmetric || !kdot.symmetric || !(k.grid == kdot.grid))
        throw Error(ErrorKind::Contract, "ad_series: k and kdot must be symmetric on one grid");
    const Grid& g = k.grid;
    int M = g.M();
    // For symmetric k and kdot the recursion keeps f_{n,2} = -conj(f_{n,1});
    // odd f_{n,1} is anti-Hermitian and equals M, so one product per order.
    CMat K = k.op();
    CMat S1 = kdot.op(), G1, X(M, M);
    Real nk = K.norm(), nkd = S1.norm();
    QuadAccumulator acc(M);
    ADSeries out;
    Real fact = 1.0;  // (n+1)!
    auto bound = [&](int n, Real fct) { return std::pow(2 * nk, n) * nkd / fct; };
    int n = 0;
    for (;; ++n) {
        fact *= (n + 1);
        if (n > 0 && bound(n, fact) < tol) break;
        if (n > n_max) {
            std::ostringstream os;
            os << "ad_series: no convergence within n_max = " << n_max << ", tail bound " << bound(n, fact);
            throw Error(ErrorKind::Truncation, os.str());
        }
        Complex cn = I1 * ((n % 2 ? 1.0 : -1.0) / fact);
        ADSeriesTerm term;
        term.n = n;
        term.even = n % 2 == 0;
        if (term.even) {
            CMat S2 = -S1.conjugate();
            term.f1 = HSKernel::from_op(g, S1, true);
            term.f2 = HSKernel::from_op(g, S2, true);
            acc.add_P(0.5 * cn * S1);
            acc.add_Q(0.5 * cn * S2);
            // G1 = -(K S2 + S1 conj K)
            X.noalias() = K * S1.conjugate();
            G1 = X - X.adjoint();
        } else {
            CMat G2 = -G1.conjugate();
            term.f1 = HSKernel::from_op(g, G1, false);
            term.f2 = HSKernel::from_op(g, G2, false);
            acc.add_R(0.5 * cn * G1);
            acc.add_R(0.5 * cn * G2.transpose());
            acc.add_constant(0.5 * cn * G2.trace());
            out.phase_contribution += 0.5 * cn * G2.trace();
            // M = (G1 + G2^T)/2 = G1; next S1 = -(M K + K M^T)
            X.noalias() = G1 * K;
            S1 = -(X + X.transpose());
        }
        out.terms.push_back(std::move(term));
    }
    // tail sum_{m >= n} (2|k|)^m |kdot| / (m+1)!
    Real tail = 0.0, f = fact;
    for (int m = n; m < n + 200; ++m) {
        if (m > n) f *= (m + 1);
        Real b = bound(m, f);
        tail += b;
        if (b < 1e-30 * std::max(tail, 1e-300)) break;
    }
    out.residual = tail;
    out.generator = acc.finish(g.weight());
    out.generator.truncation_residual = tail;
    return out;
}

QuadGenerator assemble_LK(const KernelFamily& kf, const DerivativeKernels& dk) {
    const Grid& g = kf.k.grid;
    int M = g.M();
    CMat L = cplx(laplacian_matrix(g));
    CMat C = kf.h.c.op(), S = kf.h.s.op(), P = kf.h.p.op(), R = kf.h.r.op(), K = kf.k.op();
    CMat PL = P * L, RL = R * L;
    QuadAccumulator acc(M);
    acc.add_R(L);                  // int grad a* grad a
    acc.ca(nullptr, nullptr, &PL);  // a*_x a(-Lap p_x)
    acc.ca(&PL, nullptr, nullptr);  // a*(-Lap p_x) a_x
    for (int j = 0; j < g.dim; ++j) {
        CMat Dp = P * cplx(derivative_matrix(g, j)).transpose();
        acc.ca(&Dp, nullptr, &Dp);  // a*(grad p_x) a(grad p_x)
        CMat Gk = dk.grad1_k[j].op().transpose();
        acc.ca(&Gk, nullptr, &Gk);  // grad a*(k_x) grad a(k_x)
    }
    acc.ca(&RL, nullptr, &K);       // a*(-Lap r_x) a(k_x)
    acc.ca(&S, nullptr, &RL);       // a*(s_x) a(-Lap r_x)
    acc.cc(&PL, nullptr, &K);       // a*(-Lap p_x) a*(k_x)
    acc.aa(&K, nullptr, &PL);       // a(k_x) a(-Lap p_x)
    acc.cc(nullptr, nullptr, &RL);  // a*_x a*(-Lap r_x)
    acc.aa(&RL, nullptr, nullptr);  // a(-Lap r_x) a_x
    acc.cc(&P, nullptr, &RL);       // a*(p_x) a*(-Lap r_x)
    acc.aa(&RL, nullptr, &P);       // a(-Lap r_x) a(p_x)
    (void)C;
    return acc.finish(g.weight());
}

namespace {

struct PotentialBlocks {
    RMat Vt;   // circulant realisation of w V(x_i - x_j)
    RVec h;    // (V * |phi|^2)(x)
    CMat E;    // w V(x-y) phi(x) conj(phi(y))
    CMat Pp;   // w V(x-y) phi(x) phi(y)
};

PotentialBlocks potential_blocks(const GridField& phi, const RVec& vhat) {
    PotentialBlocks b;
    b.Vt = convolution_matrix(phi.grid, vhat);
    RVec rho = phi.values.cwiseAbs2();
    b.h = b.Vt * rho;
    CMat Vc = cplx(b.Vt);
    b.E = phi.values.asDiagonal() * Vc * phi.values.conjugate().asDiagonal();
    b.Pp = phi.values.asDiagonal() * Vc * phi.values.asDiagonal();
    return b;
}

}  // namespace

QuadGenerator assemble_LV(const GridField& phi, const KernelFamily& kf, const RVec& vhat) {
    const Grid& g = phi.grid;
    int M = g.M();
    auto pb = potential_blocks(phi, vhat);
    CMat C = kf.h.c.op(), S = kf.h.s.op(), P = kf.h.p.op();
    // Mid matrices are folded into the left factor; conj(X) Mid = conj(X conj(Mid))
    CMat CH = C * pb.h.asDiagonal(), SH = S * pb.h.asDiagonal();
    CMat Pp = 0.5 * pb.Pp;
    CMat CE = C * pb.E, SEt = S * pb.E.transpose();
    CMat CPp = C * Pp, SPm = S * Pp.conjugate(), PPp = P * Pp;
    QuadAccumulator acc(M);
    // (V * |phi|^2)(x) [a*(c_x)a(c_x) + a*(s_x)a(s_x) + a*(c_x)a*(s_x) + a(s_x)a(c_x)]
    acc.ca(&CH, nullptr, &C);
    acc.ca(&SH, nullptr, &S);
    acc.cc(&CH, nullptr, &S);
    acc.aa(&SH, nullptr, &C);
    // V phi(x) conj phi(y) [a*(c_x)a(c_y) + a*(s_y)a(s_x) + a*(c_x)a*(s_y) + a(s_x)a(c_y)]
    acc.ca(&CE, nullptr, &C);
    acc.ca(&SEt, nullptr, &S);
    acc.cc(&CE, nullptr, &S);
    acc.aa(&SEt, nullptr, &C);  // E is Hermitian: conj(E^T) = E
    // 1/2 V phi phi [a*(c_x)a(s_y) + a*(c_y)a(s_x) + a(s_x)a(s_y)]; Pp is symmetric
    acc.ca(&CPp, nullptr, &S);
    acc.ca(&CPp, nullptr, &S);
    acc.aa(&SPm, nullptr, &S);
    // 1/2 V conj(phi phi) [a*(s_y)a(c_x) + a*(s_x)a(c_y) + a*(s_x)a*(s_y)]
    acc.ca(&SPm, nullptr, &C);
    acc.ca(&SPm, nullptr, &C);
    acc.cc(&SPm, nullptr, &S);
    // 1/2 V phi phi [a*(p_x)a*_y + a*(c_x)a*(p_y)] and its conjugate
    acc.cc(&PPp, nullptr, nullptr);
    acc.cc(&CPp, nullptr, &P);
    acc.aa(&PPp, nullptr, nullptr);
    acc.aa(&CPp, nullptr, &P);
    return acc.finish(g.weight());
}

QuadGenerator assemble_corrections(const RadialProfile& prof, Real lambda_coef, Real ell, const GridField& phi) {
    const Grid& g = phi.grid;
    int M = g.M();
    CVec lap = -(laplacian_matrix(g).cast<Complex>() * phi.values);
    auto mid = midpoints(phi);
    auto mlap = midpoints(GridField{g, lap});
    std::vector<Midpoints> mgrad;
    for (int j = 0; j < g.dim; ++j)
        mgrad.push_back(midpoints(GridField{g, cplx(derivative_matrix(g, j)) * phi.values}));
    auto F = [&](int i, int j) {
        Complex v = mid.at(i, j) * mlap.at(i, j);
        for (auto& m : mgrad) v += m.at(i, j) * m.at(i, j);
        return v;
    };
    // build_profile_kernel carries a minus sign: -(op) = w N omega(x-y) F(m)
    CMat Xw = -0.5 * build_profile_kernel(prof, g, F).op();

    RadialProfile ind;
    ind.support = ell;
    ind.value = [ell](Real r) { return r <= ell ? 1.0 : 0.0; };
    ind.ball_average = [ell](Real h) { return h <= ell ? 1.0 : std::pow(ell / h, 3); };
    CMat Xl = -lambda_coef * build_profile_kernel(ind, g, [&](int i, int j) {
                  Complex v = mid.at(i, j);
                  return v * v;
              }).op();

    QuadAccumulator acc(M);
    CMat Xwc = Xw.conjugate(), Xlc = Xl.conjugate();
    acc.cc(nullptr, &Xw, nullptr);
    acc.aa(nullptr, &Xwc, nullptr);
    acc.cc(nullptr, &Xl, nullptr);
    acc.aa(nullptr, &Xlc, nullptr);
    return acc.finish(g.weight());
}

Complex eta_N_complex(const GridField& phi, const KernelFamily& kf, const RVec& vhat, const RVec& wN_hat, Real N) {
    const Grid& g = phi.grid;
    Real w = g.weight();
    RVec rho = phi.values.cwiseAbs2();
    RVec mult = 0.5 * vhat - wN_hat;
    Real line1 = N * w * rho.dot(apply_multiplier(g, mult, rho.cast<Complex>()).real());

    CMat S = kf.h.s.op(), C = kf.h.c.op();
    Real line2 = 0;
    for (int j = 0; j < g.dim; ++j) line2 += (cplx(derivative_matrix(g, j)) * S).squaredNorm();

    auto pb = potential_blocks(phi, vhat);
    CMat SS = S.adjoint() * S, SC = S.adjoint() * C;
    Complex line3 = 0, line4 = 0, line5 = 0, line6 = 0;
    for (int x = 0; x < g.M(); ++x) line3 += pb.h[x] * SS(x, x);
    line4 = pb.E.cwiseProduct(SS).sum();
    line5 = std::real(pb.Pp.cwiseProduct(SC).sum());
    for (int y = 0; y < g.M(); ++y)
        for (int x = 0; x < g.M(); ++x)
            line6 += pb.Vt(x, y) / w * (std::norm(SC(x, y)) + std::norm(SS(x, y)) + SS(y, y) * SS(x, x));
    line6 /= 2 * N;
    return line1 + line2 + line3 + line4 + line5 + line6;
}

Real eta_N(const GridField& phi, const KernelFamily& kf, const RVec& vhat, const RVec& wN_hat, Real N) {
    Complex e = eta_N_complex(phi, kf, vhat, wN_hat, N);
    if (std::abs(e.imag()) > 1e-10) {
        std::ostringstream os;
        os << "eta_N: imaginary residue " << e.imag();
        throw Error(ErrorKind::Assembly, os.str());
    }
    return e.real();
}

namespace {

QuadGenerator assemble_impl(const SliceInputs& in, const GeneratorOptions& opt, KernelFamily& kf) {
    kf.k = build_kernel(in.profile, in.phi);
    HSKernel kdot = build_kdot(in.profile, in.phi, in.phidot);
    kf.h = hyperbolic(kf.k);
    auto dk = derivative_kernels(in.profile, in.phi, kf.h);
    QuadGenerator gen = ad_series(kf.k, kdot, opt.series_tol, opt.series_max).generator;
    gen += assemble_LK(kf, dk);
    gen += assemble_LV(in.phi, kf, in.vhat);
    gen += assemble_corrections(in.profile, in.lambda_coef, in.ell, in.phi);
    check_generator(gen);
    return gen;
}

}  // namespace

QuadGenerator assemble_slice(const SliceInputs& in, const GeneratorOptions& opt) {
    KernelFamily kf;
    return assemble_impl(in, opt, kf);
}

QuadGenerator assemble_L2N(const PotentialSpec& V, const RadialScattering& scat, const GridField& phi,
                           const GridField& phidot, const GeneratorOptions& opt) {
    const Grid& g = phi.grid;
    SliceInputs in;
    in.phi = phi;
    in.phidot = phidot;
    in.profile = scattering_profile(scat);
    in.lambda_coef = scat.N * scat.lambda;
    in.ell = scat.ell;
    in.vhat = potential_multiplier(g, V, scat.N, scat.beta);
    KernelFamily kf;
    QuadGenerator gen = assemble_impl(in, opt, kf);
    RVec what = hartree_nonlinearity(g, V, scat).multiplier;
    Complex e = eta_N_complex(phi, kf, in.vhat, what, scat.N);
    gen.eta_imag = std::abs(e.imag());
    gen.eta = eta_N(phi, kf, in.vhat, what, scat.N);
    return gen;
}

QuadGenerator assemble_L2inf(const PotentialSpec& V, Real ell, const GridField& phi, const GridField& phidot,
                             const GeneratorOptions& opt) {
    SliceInputs in;
    in.phi = phi;
    in.phidot = phidot;
    in.profile = asymptotic_profile(V.b0, ell);
    in.lambda_coef = 3 * V.b0 / (8 * kPi * ell * ell * ell);
    in.ell = ell;
    in.vhat = RVec::Constant(phi.grid.M(), V.b0);
    KernelFamily kf;
    return assemble_impl(in, opt, kf);
}

}  // namespace qf
