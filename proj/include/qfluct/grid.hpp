#ifndef QFLUCT_GRID_HPP
#define QFLUCT_GRID_HPP

#include <array>

#include "qfluct/types.hpp"

namespace qf {

struct Grid {
    int dim = 3;
    int G = 16;
    Real L = 8.0;

    Real dx() const { return L / G; }
    int M() const;
    Real weight() const;  // dx^dim
    bool operator==(const Grid& o) const { return dim == o.dim && G == o.G && L == o.L; }
};

void validate_grid(const Grid& g);

struct GridField {
    Grid grid;
    CVec values;
};

// Per-axis integer coordinates of a flat index (unused axes are 0).
std::array<int, 3> grid_coords(const Grid& g, int i);
int grid_index(const Grid& g, const std::array<int, 3>& c);

// Signed wavenumber 2 pi m / L with m in [-G/2, G/2).
Real axis_wavenumber(const Grid& g, int m);

// Unnormalised forward DFT and its exact inverse (inverse carries 1/M).
CVec fft_forward(const Grid& g, const CVec& x);
CVec fft_inverse(const Grid& g, const CVec& xhat);

RVec wavenumber_sq(const Grid& g);
RVec wavenumber_axis(const Grid& g, int axis, bool zero_nyquist);

// Spectral -Laplacian and first-derivative matrices acting on sample vectors.
RMat laplacian_matrix(const Grid& g);
RMat derivative_matrix(const Grid& g, int axis);

// Circulant matrix of a real even Fourier multiplier.
RMat convolution_matrix(const Grid& g, const RVec& mult);

// Band-limited interpolation onto the grid with 2G points per axis.
CVec refine2(const Grid& g, const CVec& x);

// Apply a Fourier multiplier m(k) to samples.
CVec apply_multiplier(const Grid& g, const RVec& mult, const CVec& x);

GridField gaussian_field(const Grid& g, Real sigma);
GridField plane_wave(const Grid& g, const std::array<int, 3>& m);
GridField constant_field(const Grid& g, Complex c);

}  // namespace qf

#endif  // QFLUCT_GRID_HPP
