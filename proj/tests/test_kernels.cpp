#include <doctest.h>

#include <cmath>
#include <random>

#include "qfluct/kernels.hpp"

using namespace qf;

namespace {

Grid small3() { return Grid{3, 8, 4.0}; }

// exactly band-limited field on any grid with G >= 8
Complex trig_field(const Grid& g, const std::array<Real, 3>& x) {
    Real k = 2 * kPi / g.L;
    Complex v(1.0 + 0.3 * std::cos(k * x[0]), 0.2 * std::sin(k * x[0]));
    if (g.dim == 3) v *= Complex(1.0 + 0.2 * std::cos(k * x[1] + 0.4), 0.1 * std::sin(2 * k * x[2]));
    return v;
}

GridField trig(const Grid& g) {
    GridField f{g, CVec(g.M())};
    for (int i = 0; i < g.M(); ++i) {
        auto c = grid_coords(g, i);
        f.values[i] = trig_field(g, {c[0] * g.dx(), c[1] * g.dx(), c[2] * g.dx()});
    }
    return f;
}

// Random symmetric complex kernel with prescribed HS norm.
HSKernel random_kernel(const Grid& g, Real norm, std::mt19937_64& rng) {
    std::normal_distribution<Real> n01;
    int M = g.M();
    CMat A(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) A(i, j) = Complex(n01(rng), n01(rng));
    CMat S = A + A.transpose();
    S *= norm / S.norm();
    return HSKernel::from_op(g, S, true);
}

}  // namespace

TEST_CASE("midpoints follow the shortest periodic segment") {
    Grid g = small3();
    auto f = trig(g);
    auto mid = midpoints(f);
    for (int i : {0, 5, 77, 300, 511}) {
        for (int j : {0, 3, 128, 511}) {
            auto a = grid_coords(g, i);
            auto d = min_image(g, i, j);
            std::array<Real, 3> x;
            for (int k = 0; k < 3; ++k) x[k] = (a[k] - 0.5 * d[k]) * g.dx();
            CHECK(std::abs(mid.at(i, j) - trig_field(g, x)) < 1e-12);
        }
    }
}

TEST_CASE("limit kernel entries follow the closed form") {
    Grid g = small3();
    auto phi = trig(g);
    Real b0 = 4 * kPi / 3, ell = 1.0;
    auto k = build_k_limit(b0, ell, phi);
    CHECK(k.symmetric);
    CHECK(symmetric_defect(k.entries) == 0.0);
    for (int i = 0; i < g.M(); i += 37) {
        for (int j = 0; j < g.M(); j += 11) {
            auto d = min_image(g, i, j);
            Real r = g.dx() * std::sqrt(Real(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
            auto a = grid_coords(g, i);
            std::array<Real, 3> x;
            for (int c = 0; c < 3; ++c) x[c] = (a[c] - 0.5 * d[c]) * g.dx();
            Complex m = trig_field(g, x);
            if (i == j) {
                Real h = g.dx() / 2;
                // 3/h^3 int_0^h r^2 omega_asymp(r) dr by midpoint rule
                int n = 200000;
                Real s = 0;
                for (int q = 0; q < n; ++q) {
                    Real rr = (q + 0.5) * h / n;
                    s += rr * rr * omega_asymp(b0, ell, rr);
                }
                CHECK(std::abs(k.entries(i, j) + 3 / (h * h * h) * s * h / n * m * m) < 1e-8);
            } else if (r > ell) {
                CHECK(k.entries(i, j) == Complex(0));
            } else {
                CHECK(std::abs(k.entries(i, j) + omega_asymp(b0, ell, r) * m * m) < 1e-12);
            }
        }
    }
}

TEST_CASE("zero field gives zero kernels") {
    Grid g = small3();
    auto phi = constant_field(g, 0.0);
    auto V = square_well(1, 1);
    auto scat = solve_neumann(V, 64, 0.5, 1.0, 2000);
    CHECK(build_k_N(scat, phi, 64).entries.norm() == 0.0);
    CHECK(build_k_limit(V.b0, 1.0, phi).entries.norm() == 0.0);
    auto dk = derivative_kernels(scat, phi, 64);
    CHECK(dk.grad1_k_hs == 0.0);
    CHECK(dk.grad1_p_hs == 0.0);
    CHECK(dk.lap1_p.entries.norm() == 0.0);
    CHECK(dk.lap1_r.entries.norm() == 0.0);
}

TEST_CASE("scattering profile ball average agrees with direct quadrature") {
    auto V = square_well(1, 1);
    auto scat = solve_neumann(V, 256, 0.5, 1.0, 4000);
    auto prof = scattering_profile(scat);
    Real h = 0.25;
    int n = 400000;
    Real s = 0;
    for (int q = 0; q < n; ++q) {
        Real r = (q + 0.5) * h / n;
        s += r * r * 256 * scat.omega(r);
    }
    CHECK(prof.ball_average(h) == doctest::Approx(3 / (h * h * h) * s * h / n).epsilon(1e-7));
    auto lim = asymptotic_profile(V.b0, 1.0);
    s = 0;
    for (int q = 0; q < n; ++q) {
        Real r = (q + 0.5) * h / n;
        Real v = omega_asymp(V.b0, 1.0, r);
        s += r * r * v * v;
    }
    CHECK(lim.ball_sq(h) == doctest::Approx(4 * kPi * s * h / n).epsilon(1e-7));
}

TEST_CASE("HS norm of k_N is uniform in N") {
    Grid g = small3();
    auto phi = gaussian_field(g, 0.7);
    auto V = square_well(1, 1);
    Real lo = 1e300, hi = 0;
    for (Real N : {64.0, 256.0, 1024.0, 4096.0}) {
        auto scat = solve_neumann(V, N, 0.5, 1.0, 2000);
        auto n = kernel_norms(build_k_N(scat, phi, N));
        lo = std::min(lo, n.hs);
        hi = std::max(hi, n.hs);
        CHECK(std::isfinite(n.sup_row));
        CHECK(n.sup_row > 0);
    }
    CHECK(hi / lo < 2.0);
}

TEST_CASE("hyperbolic functions: trivial and rank-one cases") {
    Grid g{1, 16, 2.0};
    auto h0 = hyperbolic(HSKernel::zero(g));
    CHECK((h0.c.op() - CMat::Identity(16, 16)).norm() < 1e-15);
    CHECK(h0.s.op().norm() == 0.0);
    CHECK(h0.p.op().norm() < 1e-15);
    CHECK(h0.r.op().norm() == 0.0);

    Real kappa = 0.8;
    CVec e = CVec::Zero(16);
    for (int i = 0; i < 16; ++i) e[i] = std::sin(0.3 * i + 0.1);
    e /= e.norm();
    CMat P = e * e.transpose();
    auto h = hyperbolic(HSKernel::from_op(g, kappa * P, true));
    CHECK((h.c.op() - (CMat::Identity(16, 16) + (std::cosh(kappa) - 1) * P)).norm() < 1e-13);
    CHECK((h.s.op() - std::sinh(kappa) * P).norm() < 1e-13);

    auto kn = kernel_norms(HSKernel::from_op(g, kappa * P, true));
    CHECK(kn.hs == doctest::Approx(kappa).epsilon(1e-14));
    Real umax = e.cwiseAbs().maxCoeff() / std::sqrt(g.weight());
    CHECK(kn.sup_row == doctest::Approx(kappa * umax).epsilon(1e-13));
    CHECK(kn.sup_entry == doctest::Approx(kappa * umax * umax).epsilon(1e-13));
    auto z = kernel_norms(HSKernel::zero(g));
    CHECK(z.hs == 0.0);
    CHECK(z.sup_row == 0.0);
    CHECK(z.sup_entry == 0.0);
}

TEST_CASE("hyperbolic: series agreement, Bogoliubov identity and symmetry") {
    std::mt19937_64 rng(7);
    Grid g{1, 64, 4.0};
    for (Real nk : {0.1, 0.5, 1.0}) {
        auto k = random_kernel(g, nk, rng);
        auto a = hyperbolic(k);
        auto b = hyperbolic_series(k, 30);
        CHECK((a.c.op() - b.c.op()).norm() < 1e-10);
        CHECK((a.s.op() - b.s.op()).norm() < 1e-10);
    }
    for (Real nk : {2.0, 5.0}) {
        auto k = random_kernel(g, nk, rng);
        auto h = hyperbolic(k);
        CHECK(verify_bogoliubov_identity(h.c, h.s) < 1e-8);
        CHECK(symmetric_defect(h.r.entries) == 0.0);
        CHECK(symmetric_defect(h.s.entries) == 0.0);
        CHECK(hermitian_defect(h.p.op()) < 1e-12);
        CHECK(h.r.hs() <= std::sinh(nk) - nk + 1e-10);
    }
    CHECK(verify_bogoliubov_identity(HSKernel::identity(g), HSKernel::zero(g)) == 0.0);
    CHECK(verify_bogoliubov_identity(HSKernel::identity(g), HSKernel::identity(g)) ==
          doctest::Approx(std::sqrt(64.0)));
    HSKernel asym = random_kernel(g, 1.0, rng);
    asym.entries(0, 1) += 1.0;
    CHECK_THROWS_AS(hyperbolic(asym), Error);
}

TEST_CASE("analytic gradient kernel matches spectral differentiation for a smooth profile") {
    Grid g{1, 128, 16.0};
    RadialProfile prof;
    prof.support = 8.0;
    prof.value = [](Real r) { return std::exp(-r * r); };
    prof.derivative = [](Real r) { return -2 * r * std::exp(-r * r); };
    prof.ball_average = [](Real) { return 1.0; };
    prof.ball_grad_sq = [](Real) { return 0.0; };
    prof.ball_sq = [](Real) { return 0.0; };
    auto phi = gaussian_field(g, 1.0);
    auto k = build_kernel(prof, phi);
    auto dk = derivative_kernels(prof, phi, hyperbolic(k));
    CMat spectral = derivative_matrix(g, 0).cast<Complex>() * k.entries;
    CHECK((dk.grad1_k[0].entries - spectral).norm() < 1e-8 * spectral.norm());
}

TEST_CASE("gradient norm grows like N^(beta/2) while grad p stays bounded") {
    Grid g = small3();
    auto phi = gaussian_field(g, 0.7);
    auto V = square_well(1, 1);
    std::vector<Real> Ns{64, 256, 1024, 4096}, gk, gp;
    for (Real N : Ns) {
        auto scat = solve_neumann(V, N, 0.5, 1.0, 4000);
        auto dk = derivative_kernels(scat, phi, N);
        gk.push_back(dk.grad1_k_hs_resolved);
        gp.push_back(dk.grad1_p_hs);
    }
    Real slope = std::log(gk.back() / gk.front()) / std::log(Ns.back() / Ns.front());
    CHECK(slope == doctest::Approx(0.25).epsilon(0.8));
    CHECK(std::abs(slope - 0.25) <= 0.2);
    CHECK(*std::max_element(gp.begin(), gp.end()) / *std::min_element(gp.begin(), gp.end()) < 2.0);
}

TEST_CASE("kernel distance decreases in N") {
    Grid g = small3();
    auto phi = gaussian_field(g, 0.7);
    auto V = square_well(1, 1);
    auto lim = build_k_limit(V.b0, 1.0, phi);
    CHECK(kernel_distance(lim, lim) == 0.0);
    Real prev = 1e300;
    for (Real N : {64.0, 256.0, 1024.0, 4096.0}) {
        auto scat = solve_neumann(V, N, 0.5, 1.0, 4000);
        Real d = kernel_distance(build_k_N(scat, phi, N), lim);
        CHECK(d < prev);
        prev = d;
    }
    CHECK_THROWS_AS(kernel_distance(lim, HSKernel::zero(Grid{3, 4, 4.0})), Error);
}

TEST_CASE("core-resolved kernel distance carries the N^(-beta/2) rate") {
    Grid g = small3();
    auto phi = gaussian_field(g, 0.7);
    auto V = square_well(1, 1);
    auto lim = build_k_limit(V.b0, 1.0, phi);
    std::vector<Real> Ns{64, 256, 1024, 4096}, d;
    for (Real N : Ns) {
        auto scat = solve_neumann(V, N, 0.5, 1.0, 4000);
        auto k = build_k_N(scat, phi, N);
        Real res = kernel_distance_resolved(k, lim, scat, V.b0, phi, phi);
        CHECK(res >= kernel_distance(k, lim) * 0.5);
        d.push_back(res);
        auto z = constant_field(g, 0.0);
        CHECK(kernel_distance_resolved(build_k_N(scat, z, N), build_k_limit(V.b0, 1.0, z), scat, V.b0, z, z) == 0.0);
    }
    Real slope = std::log(d.back() / d.front()) / std::log(Ns.back() / Ns.front());
    CHECK(std::abs(slope + 0.25) < 0.1);
}
