#include "qfluct/kernels.hpp"

#include <cmath>
#include <limits>


namespace qf {

namespace {

void check_size(const Grid& g) {
    if (g.M() > kMaxKernelModes) throw Error(ErrorKind::Validation, "kernel grids are limited to M <= 4096 modes");
}

}  // namespace

HSKernel HSKernel::from_op(const Grid& g, const CMat& op, bool symmetric) {
    HSKernel k;
    k.grid = g;
    k.weight = g.weight();
    k.entries = op / k.weight;
    k.symmetric = symmetric;
    return k;
}

HSKernel HSKernel::zero(const Grid& g) {
    return HSKernel{g, CMat::Zero(g.M(), g.M()), g.weight(), true};
}

HSKernel HSKernel::identity(const Grid& g) {
    return from_op(g, CMat::Identity(g.M(), g.M()), true);
}

// The interpolant is a cubic Hermite spline on the radial nodes, so a 5-point
// Gauss rule per node interval is exact for the polynomial moments used here.
Real ball_moment(const RadialScattering& s, Real h, const std::function<Real(Real)>& g) {
    static const Real x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
    static const Real w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};
    Real top = std::min(h, s.ell), a = 0.0, sum = 0.0;
    for (std::size_t k = 0; k <= s.r.size() && a < top; ++k) {
        Real b = k < s.r.size() ? std::min(s.r[k], top) : top;
        for (int q = 0; q < 5; ++q) sum += 0.5 * (b - a) * w[q] * g(0.5 * (a + b) + 0.5 * (b - a) * x[q]);
        a = b;
    }
    return sum;
}

RadialProfile scattering_profile(const RadialScattering& scat) {
    RadialProfile p;
    const RadialScattering* s = &scat;  // caller keeps scat alive
    Real N = scat.N;
    p.support = scat.ell;
    p.value = [s, N](Real r) { return N * s->omega(r); };
    p.derivative = [s, N](Real r) { return N * s->omega_prime(r); };
    auto ball = [s](Real h, const std::function<Real(Real)>& g) { return ball_moment(*s, h, g); };
    p.ball_average = [s, N, ball](Real h) {
        return 3.0 / (h * h * h) * ball(h, [&](Real r) { return r * r * N * s->omega(r); });
    };
    p.ball_grad_sq = [s, N, ball](Real h) {
        return 4 * kPi * ball(h, [&](Real r) {
            Real d = N * s->omega_prime(r);
            return r * r * d * d;
        });
    };
    p.ball_sq = [s, N, ball](Real h) {
        return 4 * kPi * ball(h, [&](Real r) {
            Real v = N * s->omega(r);
            return r * r * v * v;
        });
    };
    return p;
}

RadialProfile asymptotic_profile(Real b0, Real ell) {
    RadialProfile p;
    p.support = ell;
    Real c = b0 / (8 * kPi);
    p.value = [b0, ell](Real r) { return omega_asymp(b0, ell, r); };
    p.derivative = [b0, ell](Real r) { return omega_asymp_prime(b0, ell, r); };
    p.ball_average = [c, ell](Real h) {
        Real H = std::min(h, ell);
        return 3.0 / (h * h * h) * c * (H * H / 2 - H * H * H / (2 * ell) + std::pow(H, 5) / (10 * ell * ell * ell));
    };
    p.ball_grad_sq = [b0](Real) { return b0 == 0.0 ? 0.0 : std::numeric_limits<Real>::infinity(); };
    p.ball_sq = [c, ell](Real h) {
        Real H = std::min(h, ell);
        Real a = 1.5 / ell, b = 0.5 / (ell * ell * ell);
        Real I = H + a * a * H * H * H / 3 + b * b * std::pow(H, 7) / 7 - a * H * H + b * std::pow(H, 4) / 2 -
                 2 * a * b * std::pow(H, 5) / 5;
        return 4 * kPi * c * c * I;
    };
    return p;
}

std::array<int, 3> min_image(const Grid& g, int i, int j) {
    auto a = grid_coords(g, i), b = grid_coords(g, j);
    std::array<int, 3> d{0, 0, 0};
    for (int k = 0; k < g.dim; ++k) {
        int x = a[k] - b[k];
        if (x > g.G / 2) x -= g.G;
        if (x < -g.G / 2) x += g.G;
        d[k] = x;
    }
    return d;
}

Midpoints midpoints(const GridField& phi) {
    return Midpoints{phi.grid, refine2(phi.grid, phi.values)};
}

Complex Midpoints::at(int i, int j) const {
    auto a = grid_coords(grid, i), b = grid_coords(grid, j);
    int G = grid.G, idx = 0;
    for (int k = 0; k < grid.dim; ++k) {
        int s = a[k] + b[k], d = a[k] - b[k];
        if (d > G / 2 || d < -G / 2) s += G;
        idx = idx * 2 * G + (s % (2 * G));
    }
    return refined[idx];
}

namespace {

// Lazily tabulated profile values indexed by the integer |d|^2.
struct ProfileTable {
    const RadialProfile& prof;
    Real dx;
    std::vector<Real> vals, ders;
    ProfileTable(const RadialProfile& p, const Grid& g) : prof(p), dx(g.dx()) {
        std::size_t n = static_cast<std::size_t>(g.dim) * (g.G / 2) * (g.G / 2) + 1;
        vals.assign(n, std::numeric_limits<Real>::quiet_NaN());
        ders.assign(n, std::numeric_limits<Real>::quiet_NaN());
    }
    Real value(long n2) {
        if (std::isnan(vals[n2])) vals[n2] = prof.value(dx * std::sqrt(static_cast<Real>(n2)));
        return vals[n2];
    }
    Real derivative(long n2) {
        if (std::isnan(ders[n2])) ders[n2] = prof.derivative(dx * std::sqrt(static_cast<Real>(n2)));
        return ders[n2];
    }
};

long norm2(const std::array<int, 3>& d) {
    return static_cast<long>(d[0]) * d[0] + static_cast<long>(d[1]) * d[1] + static_cast<long>(d[2]) * d[2];
}

}  // namespace

HSKernel build_profile_kernel(const RadialProfile& prof, const Grid& g,
                        const std::function<Complex(int, int)>& m) {
    check_size(g);
    int M = g.M();
    ProfileTable tab(prof, g);
    Real diag = prof.ball_average(0.5 * g.dx());
    HSKernel k = HSKernel::zero(g);
    for (int j = 0; j < M; ++j) {
        k.entries(j, j) = -diag * m(j, j);
        for (int i = j + 1; i < M; ++i) {
            long n2 = norm2(min_image(g, i, j));
            Real r = g.dx() * std::sqrt(static_cast<Real>(n2));
            if (r > prof.support) continue;
            Complex v = -tab.value(n2) * m(i, j);
            k.entries(i, j) = v;
            k.entries(j, i) = v;
        }
    }
    k.symmetric = true;
    return k;
}

HSKernel build_kernel(const RadialProfile& prof, const GridField& phi) {
    auto mid = midpoints(phi);
    return build_profile_kernel(prof, phi.grid, [&](int i, int j) {
        Complex v = mid.at(i, j);
        return v * v;
    });
}

HSKernel build_k_N(const RadialScattering& scat, const GridField& phi, Real N) {
    if (N != scat.N) throw Error(ErrorKind::Contract, "build_k_N: N differs from the scattering solution");
    return build_kernel(scattering_profile(scat), phi);
}

HSKernel build_k_limit(Real b0, Real ell, const GridField& phi) {
    return build_kernel(asymptotic_profile(b0, ell), phi);
}

HSKernel build_kdot(const RadialProfile& prof, const GridField& phi, const GridField& phidot) {
    auto mid = midpoints(phi);
    auto dmid = midpoints(phidot);
    return build_profile_kernel(prof, phi.grid, [&](int i, int j) { return 2.0 * mid.at(i, j) * dmid.at(i, j); });
}

namespace {

void require_symmetric(const HSKernel& k) {
    if (!k.symmetric || symmetric_defect(k.entries) > 1e-12 * std::max(1.0, k.entries.norm()))
        throw Error(ErrorKind::Contract, "hyperbolic: kernel must be symmetric");
}

Hyperbolic pack(const Grid& g, const CMat& c, const CMat& s, const CMat& K) {
    int M = g.M();
    Hyperbolic h;
    h.c = HSKernel::from_op(g, c, false);
    h.s = HSKernel::from_op(g, s, true);
    h.p = HSKernel::from_op(g, c - CMat::Identity(M, M), false);
    h.r = HSKernel::from_op(g, s - K, true);
    return h;
}

}  // namespace

Hyperbolic hyperbolic(const HSKernel& k) {
    require_symmetric(k);
    CMat K = k.op();
    CMat A = K * K.conjugate();
    Real scale = std::max(1.0, A.norm());
    if (hermitian_defect(A) > 1e-10 * scale)
        throw Error(ErrorKind::Numeric, "hyperbolic: k kbar is not Hermitian");
    A = 0.5 * (A + A.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(A);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::Numeric, "hyperbolic: eigendecomposition failed");
    const CMat& W = es.eigenvectors();
    RVec ch(W.cols()), sh(W.cols());
    for (int i = 0; i < W.cols(); ++i) {
        Real d = std::sqrt(std::max(0.0, es.eigenvalues()[i]));
        ch[i] = std::cosh(d);
        sh[i] = d < 1e-6 ? 1.0 + d * d / 6.0 : std::sinh(d) / d;
    }
    CMat c = W * ch.cast<Complex>().asDiagonal() * W.adjoint();
    CMat s = W * sh.cast<Complex>().asDiagonal() * W.adjoint() * K;
    s = 0.5 * (s + s.transpose()).eval();
    c = 0.5 * (c + c.adjoint()).eval();
    return pack(k.grid, c, s, K);
}

Hyperbolic hyperbolic_series(const HSKernel& k, int terms) {
    require_symmetric(k);
    int M = k.size();
    CMat K = k.op();
    CMat A = K * K.conjugate();
    CMat term = CMat::Identity(M, M);  // A^n / (2n)!
    CMat c = term, s = term;
    CMat sterm = term;                 // A^n / (2n+1)!
    for (int n = 1; n <= terms; ++n) {
        term = (term * A / static_cast<Real>((2 * n - 1) * (2 * n))).eval();
        sterm = (sterm * A / static_cast<Real>((2 * n) * (2 * n + 1))).eval();
        c += term;
        s += sterm;
    }
    return pack(k.grid, c, s * K, K);
}

Real verify_bogoliubov_identity(const HSKernel& c, const HSKernel& s) {
    if (!(c.grid == s.grid)) throw Error(ErrorKind::Contract, "verify_bogoliubov_identity: grid mismatch");
    CMat C = c.op(), S = s.op();
    return (C * C.adjoint() - S * S.adjoint() - CMat::Identity(C.rows(), C.cols())).norm();
}

KernelNorms kernel_norms(const HSKernel& k) {
    KernelNorms n;
    n.hs = k.hs();
    n.sup_row = std::sqrt(k.weight) * k.entries.rowwise().norm().maxCoeff();
    n.sup_entry = k.entries.cwiseAbs().maxCoeff();
    return n;
}

DerivativeKernels derivative_kernels(const RadialProfile& prof, const GridField& phi, const Hyperbolic& h) {
    const Grid& g = phi.grid;
    check_size(g);
    int M = g.M();
    DerivativeKernels dk;
    auto mid = midpoints(phi);
    std::array<Midpoints, 3> dmid;
    std::array<RMat, 3> D;
    for (int a = 0; a < 3; ++a) {
        dk.grad1_k[a] = HSKernel::zero(g);
        dk.grad1_p[a] = HSKernel::zero(g);
        if (a < g.dim) {
            D[a] = derivative_matrix(g, a);
            GridField dphi{g, D[a].cast<Complex>() * phi.values};
            dmid[a] = midpoints(dphi);
        }
    }
    ProfileTable tab(prof, g);
    Real diag = prof.ball_average(0.5 * g.dx());
    Real grid_sq = 0;
    for (int a = 0; a < g.dim; ++a) {
        CMat& E = dk.grad1_k[a].entries;
        for (int i = 0; i < M; ++i) {
            for (int j = 0; j < M; ++j) {
                Complex m = mid.at(i, j), dm = dmid[a].at(i, j);
                if (i == j) {
                    E(i, j) = -diag * m * dm;
                    continue;
                }
                auto d = min_image(g, i, j);
                long n2 = norm2(d);
                Real r = g.dx() * std::sqrt(static_cast<Real>(n2));
                if (r > prof.support) continue;
                Real unit = d[a] * g.dx() / r;
                // grad_x of -P(|x-y|) phi(m)^2; grad_x phi(m)^2 = phi(m) grad phi(m)
                E(i, j) = -tab.derivative(n2) * unit * m * m - tab.value(n2) * m * dm;
            }
        }
        grid_sq += std::pow(dk.grad1_k[a].hs(), 2);
    }
    dk.grad1_k_hs = std::sqrt(grid_sq);
    Real core = prof.ball_grad_sq(0.5 * g.dx());
    Real quartic = g.weight() * phi.values.cwiseAbs2().cwiseAbs2().sum();
    dk.grad1_k_hs_resolved = std::sqrt(grid_sq + core * quartic);

    RMat Lap = laplacian_matrix(g);
    CMat P = h.p.entries, R = h.r.entries;
    Real gp = 0;
    for (int a = 0; a < g.dim; ++a) {
        dk.grad1_p[a].entries = D[a].cast<Complex>() * P;
        dk.grad1_p[a].symmetric = false;
        gp += std::pow(dk.grad1_p[a].hs(), 2);
    }
    dk.grad1_p_hs = std::sqrt(gp);
    dk.lap1_p = HSKernel{g, Lap.cast<Complex>() * P, g.weight(), false};
    dk.lap1_r = HSKernel{g, Lap.cast<Complex>() * R, g.weight(), false};
    return dk;
}

DerivativeKernels derivative_kernels(const RadialScattering& scat, const GridField& phi, Real N) {
    auto k = build_k_N(scat, phi, N);
    return derivative_kernels(scattering_profile(scat), phi, hyperbolic(k));
}

Real kernel_distance_resolved(const HSKernel& kN, const HSKernel& kL, const RadialScattering& scat, Real b0,
                              const GridField& phiN, const GridField& phi) {
    if (!(kN.grid == kL.grid) || !(phiN.grid == kN.grid) || !(phi.grid == kN.grid))
        throw Error(ErrorKind::Contract, "kernel_distance_resolved: grid mismatch");
    const Grid& g = kN.grid;
    Real h = 0.5 * g.dx(), N = scat.N;
    auto lim = asymptotic_profile(b0, scat.ell);
    Real sNN = scattering_profile(scat).ball_sq(h);
    Real sLL = lim.ball_sq(h);
    Real sNL = 4 * kPi * ball_moment(scat, h, [&](Real r) {
        return r > scat.ell ? 0.0 : r * r * N * scat.omega(r) * omega_asymp(b0, scat.ell, r);
    });
    CMat D = kN.op() - kL.op();
    Real sq = D.squaredNorm() - D.diagonal().squaredNorm();
    for (int i = 0; i < g.M(); ++i) {
        Complex a = phiN.values[i] * phiN.values[i], b = phi.values[i] * phi.values[i];
        sq += g.weight() * (std::norm(a) * sNN + std::norm(b) * sLL - 2 * std::real(a * std::conj(b)) * sNL);
    }
    return std::sqrt(std::max(0.0, sq));
}

Real kernel_distance(const HSKernel& a, const HSKernel& b) {
    if (!(a.grid == b.grid)) throw Error(ErrorKind::Contract, "kernel_distance: grid mismatch");
    return (a.op() - b.op()).norm();
}

}  // namespace qf
