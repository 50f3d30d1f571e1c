#include "qfluct/grid.hpp"

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace qf {

int Grid::M() const {
    int m = 1;
    for (int d = 0; d < dim; ++d) m *= G;
    return m;
}

Real Grid::weight() const { return std::pow(dx(), dim); }

void validate_grid(const Grid& g) {
    if (g.dim != 1 && g.dim != 3) throw Error(ErrorKind::Validation, "grid.dim must be 1 or 3");
    if (g.G < 2 || (g.G & (g.G - 1)) != 0) throw Error(ErrorKind::Validation, "grid.G must be a power of two");
    if (!(g.L > 0.0) || !std::isfinite(g.L)) throw Error(ErrorKind::Validation, "grid.L must be positive");
}

std::array<int, 3> grid_coords(const Grid& g, int i) {
    std::array<int, 3> c{0, 0, 0};
    for (int d = g.dim - 1; d >= 0; --d) {
        c[d] = i % g.G;
        i /= g.G;
    }
    return c;
}

int grid_index(const Grid& g, const std::array<int, 3>& c) {
    int i = 0;
    for (int d = 0; d < g.dim; ++d) i = i * g.G + c[d];
    return i;
}

Real axis_wavenumber(const Grid& g, int m) {
    if (m >= g.G / 2) m -= g.G;
    return 2.0 * kPi * m / g.L;
}

namespace {

// Transform every line along every axis of a G^dim array in place.
void fft_all_axes(int dim, int G, CVec& x, bool inverse) {
    Eigen::FFT<Real> fft;
    std::vector<Complex> in(G), out(G);
    int M = static_cast<int>(x.size());
    for (int axis = 0; axis < dim; ++axis) {
        int stride = 1;
        for (int d = axis + 1; d < dim; ++d) stride *= G;
        for (int base = 0; base < M; ++base) {
            if ((base / stride) % G != 0) continue;
            for (int k = 0; k < G; ++k) in[k] = x[base + k * stride];
            if (inverse) fft.inv(out, in); else fft.fwd(out, in);
            for (int k = 0; k < G; ++k) x[base + k * stride] = out[k];
        }
    }
}

}  // namespace

CVec fft_forward(const Grid& g, const CVec& x) {
    CVec y = x;
    fft_all_axes(g.dim, g.G, y, false);
    return y;
}

CVec fft_inverse(const Grid& g, const CVec& xhat) {
    CVec y = xhat;
    fft_all_axes(g.dim, g.G, y, true);
    return y;
}

RVec wavenumber_sq(const Grid& g) {
    RVec k2(g.M());
    for (int i = 0; i < g.M(); ++i) {
        auto c = grid_coords(g, i);
        Real s = 0;
        for (int d = 0; d < g.dim; ++d) {
            Real k = axis_wavenumber(g, c[d]);
            s += k * k;
        }
        k2[i] = s;
    }
    return k2;
}

RVec wavenumber_axis(const Grid& g, int axis, bool zero_nyquist) {
    RVec k(g.M());
    for (int i = 0; i < g.M(); ++i) {
        int m = grid_coords(g, i)[axis];
        k[i] = (zero_nyquist && m == g.G / 2) ? 0.0 : axis_wavenumber(g, m);
    }
    return k;
}

CVec apply_multiplier(const Grid& g, const RVec& mult, const CVec& x) {
    CVec y = fft_forward(g, x);
    y.array() *= mult.array().cast<Complex>();
    return fft_inverse(g, y);
}

namespace {

RMat multiplier_matrix(const Grid& g, const CVec& mult) {
    // Columns are the operator applied to unit vectors; the result is real for
    // multipliers with the symmetry m(-k) = conj(m(k)).
    int M = g.M();
    RMat A(M, M);
    CVec e = CVec::Zero(M);
    for (int j = 0; j < M; ++j) {
        e.setZero();
        e[j] = 1.0;
        CVec y = fft_forward(g, e);
        y.array() *= mult.array();
        y = fft_inverse(g, y);
        A.col(j) = y.real();
    }
    return A;
}

}  // namespace

RMat convolution_matrix(const Grid& g, const RVec& mult) {
    return multiplier_matrix(g, mult.cast<Complex>());
}

RMat laplacian_matrix(const Grid& g) {
    return multiplier_matrix(g, wavenumber_sq(g).cast<Complex>());
}

RMat derivative_matrix(const Grid& g, int axis) {
    CVec m = Complex(0, 1) * wavenumber_axis(g, axis, true).cast<Complex>();
    return multiplier_matrix(g, m);
}

CVec refine2(const Grid& g, const CVec& x) {
    const int G = g.G, G2 = 2 * G;
    // refine one axis at a time; shape is tracked per axis
    std::array<int, 3> n{1, 1, 1};
    for (int d = 0; d < g.dim; ++d) n[d] = G;
    CVec cur = x;
    Eigen::FFT<Real> fft;
    std::vector<Complex> in(G), out(G), big(G2), bigout(G2);
    for (int axis = 0; axis < g.dim; ++axis) {
        std::array<int, 3> m = n;
        m[axis] = G2;
        int total = m[0] * m[1] * m[2];
        CVec next(total);
        int stride_old = 1, stride_new = 1;
        for (int d = axis + 1; d < 3; ++d) {
            stride_old *= n[d];
            stride_new *= m[d];
        }
        int outer = 1;
        for (int d = 0; d < axis; ++d) outer *= n[d];
        for (int o = 0; o < outer; ++o) {
            for (int s = 0; s < stride_old; ++s) {
                int base_old = o * G * stride_old + s;
                int base_new = o * G2 * stride_new + s;
                for (int k = 0; k < G; ++k) in[k] = cur[base_old + k * stride_old];
                fft.fwd(out, in);
                std::fill(big.begin(), big.end(), Complex(0));
                for (int k = 0; k < G / 2; ++k) big[k] = out[k];
                for (int k = G / 2 + 1; k < G; ++k) big[k + G] = out[k];
                big[G / 2] = 0.5 * out[G / 2];
                big[G2 - G / 2] = 0.5 * out[G / 2];
                fft.inv(bigout, big);
                for (int k = 0; k < G2; ++k) next[base_new + k * stride_new] = 2.0 * bigout[k];
            }
        }
        cur = next;
        n = m;
    }
    return cur;
}

GridField gaussian_field(const Grid& g, Real sigma) {
    GridField f{g, CVec(g.M())};
    for (int i = 0; i < g.M(); ++i) {
        auto c = grid_coords(g, i);
        Real r2 = 0;
        for (int d = 0; d < g.dim; ++d) {
            Real x = c[d] * g.dx() - 0.5 * g.L;
            r2 += x * x;
        }
        f.values[i] = std::exp(-r2 / (2 * sigma * sigma));
    }
    f.values /= std::sqrt(g.weight()) * f.values.norm();
    return f;
}

GridField plane_wave(const Grid& g, const std::array<int, 3>& m) {
    GridField f{g, CVec(g.M())};
    for (int i = 0; i < g.M(); ++i) {
        auto c = grid_coords(g, i);
        Real ph = 0;
        for (int d = 0; d < g.dim; ++d) ph += 2 * kPi * m[d] * c[d] / static_cast<Real>(g.G);
        f.values[i] = std::polar(std::pow(g.L, -0.5 * g.dim), ph);
    }
    return f;
}

GridField constant_field(const Grid& g, Complex c) {
    return GridField{g, CVec::Constant(g.M(), c)};
}

}  // namespace qf
