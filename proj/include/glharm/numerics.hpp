#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace glharm::numerics {

using cplx = std::complex<double>;

enum class GridKind { uniform, gauss_legendre };

// One-dimensional quadrature rule: strictly increasing nodes with positive
// weights.
struct Grid1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    GridKind kind = GridKind::gauss_legendre;

    std::size_t size() const { return nodes.size(); }
    void validate() const;
    bool is_uniform(double* step = nullptr) const;
};

// n-point Gauss-Legendre rule on [a,b]; nodes by Newton iteration on the
// Legendre recurrence, converged to 1e-15.
Grid1D gauss_legendre(std::size_t n, double a, double b);

// n equally spaced nodes on [a,b] (trapezoid weights; spectrally accurate for
// periodic integrands sampled over one period without the duplicate endpoint).
Grid1D uniform_grid(std::size_t n, double a, double b, bool periodic = false);

// Gauss-Legendre rule transported through t = tan(theta). Integrates over the
// whole real line; weights carry the sec^2 Jacobian.
Grid1D tan_compactified(std::size_t n);

// Composite rule: `panels` consecutive Gauss-Legendre panels of `per_panel`
// nodes each.
Grid1D composite_gauss(std::size_t per_panel, std::size_t panels, double a, double b);

// Complex samples on a tensor product of 1 or 2 grids.
struct SampledFunction {
    std::vector<Grid1D> grids;
    std::vector<cplx> values;  // row-major: index = i*n1 + j for 2D

    void validate() const;
    std::size_t rank() const { return grids.size(); }
    cplx& at(std::size_t i) { return values[i]; }
    cplx& at(std::size_t i, std::size_t j) { return values[i * grids[1].size() + j]; }
    const cplx& at(std::size_t i, std::size_t j) const {
        return values[i * grids[1].size() + j];
    }
};

SampledFunction sample1d(const Grid1D& g, const std::function<cplx(double)>& f);
SampledFunction sample2d(const Grid1D& g0, const Grid1D& g1,
                         const std::function<cplx(double, double)>& f);

// Weighted sum of the samples over the tensor rule (fixed-order compensated
// summation, so results do not depend on evaluation strategy).
cplx integrate(const SampledFunction& f);

double l2_norm(const SampledFunction& f);
cplx l2_inner(const SampledFunction& f, const SampledFunction& g);

// Box bounds and per-dimension node counts for truncated integrals, plus the
// refinement factor used by convergence studies.
struct QuadSpec {
    std::vector<std::size_t> counts;
    std::vector<std::pair<double, double>> box;
    double refine_factor = 1.5;

    void validate() const;
    QuadSpec refined() const;
    // Box with every half-width enlarged by 25%, for tail estimates.
    QuadSpec enlarged(double frac = 0.25) const;
};

struct DiffResult {
    SampledFunction deriv;
    double est_error = 0.0;  // Richardson-style truncation estimate
};

// 4th-order central differences along `axis` (one-sided at edges). Requires a
// uniform grid along that axis. `step_refinements` coarsening levels feed the
// error estimate.
DiffResult central_diff(const SampledFunction& samples, std::size_t axis,
                        std::size_t step_refinements = 1);

// Barycentric interpolation weights for arbitrary distinct nodes.
std::vector<double> barycentric_weights(const std::vector<double>& nodes);
cplx barycentric_eval(const std::vector<double>& nodes, const std::vector<double>& bw,
                      const std::vector<cplx>& values, double x);

double kahan_sum(const std::vector<double>& terms);

// Eigenvalues of a symmetric n x n matrix (row-major) by cyclic Jacobi
// rotations, ascending.
std::vector<double> jacobi_eigenvalues(std::vector<double> m, std::size_t n);

}  // namespace glharm::numerics
