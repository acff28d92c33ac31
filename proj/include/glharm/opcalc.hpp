#pragma once

#include <functional>
#include <string>
#include <vector>

#include "glharm/fourier.hpp"

namespace glharm::opcalc {

using fourier::FiberQuad;
using fourier::KernelMatrix;
using fourier::PrincipalSeriesPoint;
using gl2::GeneratorId;
using gl2::TestFunction;
using numerics::cplx;
using numerics::Grid1D;

// Imaginary-shift operator on the parameter point:
// (mu_i, eps_i) -> (mu_i + sign, eps_i + 1).
struct ShiftOp {
    int index = 1;  // 1 or 2
    int sign = +1;  // +1 or -1
};

PrincipalSeriesPoint shift_point(const PrincipalSeriesPoint& p, const ShiftOp& v);

// (c0 + c1 mu1 + c2 mu2) / (d0 + d1 mu1 + d2 mu2); denominators are products
// of (mu1 - mu2) factors only, guarded at 1e-6.
struct RationalCoef {
    cplx c0{0.0}, c1{0.0}, c2{0.0};
    cplx d0{1.0}, d1{0.0}, d2{0.0};
    cplx eval(const PrincipalSeriesPoint& p) const;
    static RationalCoef one();
};

enum class DerivKind { none, dt, ds, mobius_s };

// Whether rational coefficients are read at the unshifted parameters of the
// result (target) or at the shifted point the kernel is pulled from (source).
enum class CoefAt { target, source };

std::string to_string(CoefAt c);

struct DiffDiffTerm {
    RationalCoef coef;
    DerivKind deriv = DerivKind::none;
    RationalCoef mobius_mult;  // the linear-in-s multiplier of mobius_s
    std::vector<ShiftOp> shifts;
};

struct DiffDiffOp {
    std::string name;
    GeneratorId partner;
    std::vector<DiffDiffTerm> terms;
    CoefAt coef_at = CoefAt::target;
};

// The seven displayed Fourier-side operators.
std::vector<DiffDiffOp> builtin_ops();
const DiffDiffOp& builtin(GeneratorId partner);

// Evaluate op on the kernel transform of F: each term re-evaluates the kernel
// at the shifted parameters (K is entire in mu for compactly supported F),
// differentiates analytically under the fiber integral, and applies the
// rational coefficient per the coef_at convention.
KernelMatrix apply_diffdiff(const DiffDiffOp& op, const TestFunction& f,
                            const PrincipalSeriesPoint& p, const Grid1D& tgrid,
                            const Grid1D& sgrid, const FiberQuad& quad,
                            unsigned threads = 0);

// Same combination logic on a closed-form kernel (for unit tests).
struct SyntheticKernel {
    std::function<cplx(double, double)> value, dt, ds;
};
KernelMatrix apply_diffdiff_synthetic(const DiffDiffOp& op, const SyntheticKernel& k,
                                      const PrincipalSeriesPoint& p,
                                      const Grid1D& tgrid, const Grid1D& sgrid);

// Analytic-vs-finite-difference cross-check of the kernel t/s derivatives at
// sampled nodes; returns the max relative deviation.
double derivative_crosscheck(const TestFunction& f, const PrincipalSeriesPoint& p,
                             const Grid1D& tgrid, const Grid1D& sgrid,
                             const FiberQuad& quad, fourier::KernelDeriv which,
                             std::size_t samples = 3);

struct CorrespondenceReport {
    std::string pair;
    std::string point;
    std::string fdesc;
    double residual = 0.0;        // winning convention, relative HS
    double residual_other = 0.0;  // the other convention
    CoefAt convention = CoefAt::target;
    double per_node_max = 0.0;
    double lhs_norm = 0.0;
    double refined_residual = 0.0;
    double refinement_ratio = 0.0;  // residual / refined_residual
};

// Computes L = K(applied generator) and R = (Fourier-side op applied), and
// reports the relative HS residual plus its behavior under one quadrature
// refinement. Both coefficient conventions are evaluated; the winner is
// recorded.
CorrespondenceReport verify_correspondence(GeneratorId pair, const TestFunction& f,
                                           const PrincipalSeriesPoint& p,
                                           const Grid1D& tgrid, const Grid1D& sgrid,
                                           const FiberQuad& quad,
                                           bool with_refinement = true,
                                           unsigned threads = 0);

}  // namespace glharm::opcalc
