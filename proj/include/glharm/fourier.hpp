#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "glharm/gl2.hpp"
#include "glharm/numerics.hpp"
#include "glharm/specfun.hpp"

namespace glharm::fourier {

using gl2::GroupElement;
using gl2::TestFunction;
using numerics::cplx;
using numerics::Grid1D;
using numerics::QuadSpec;
using numerics::SampledFunction;

// Parameter (mu1, eps1; mu2, eps2) of a principal-series representation.
struct PrincipalSeriesPoint {
    cplx mu1{0.0, 0.0};
    int eps1 = 0;
    cplx mu2{0.0, 0.0};
    int eps2 = 0;

    static PrincipalSeriesPoint unitary(double tau1, int e1, double tau2, int e2) {
        return {cplx(0.0, tau1), e1, cplx(0.0, tau2), e2};
    }
    std::string str() const;
};

// Sampled kernel K(t,s | mu,eps) on a (t,s) grid.
struct KernelMatrix {
    Grid1D tgrid, sgrid;
    std::vector<cplx> values;  // row-major over (t, s)
    PrincipalSeriesPoint point;
    std::string provenance;

    cplx& at(std::size_t i, std::size_t j) { return values[i * sgrid.size() + j]; }
    const cplx& at(std::size_t i, std::size_t j) const {
        return values[i * sgrid.size() + j];
    }
    void validate() const;
};

enum class KernelDeriv { value, dt, ds };

// Node counts for the fiber integral over (a, c, d).
struct FiberQuad {
    std::size_t na = 16, nc = 16, nd = 16;
    // log-panel resolution for the interval-adapted path
    double nodes_per_unit = 10.0;

    FiberQuad refined(double factor = 1.5) const;
    std::string str() const;
};

// The transform F -> K(t,s|p): for each (t,s) the 3D fiber integral over
// (a,c,d), after eliminating b through b* = s(a+tc) - t d. The integrand
// factorizes as
//   F(a, b*, c, d) (a+tc)^{-3/2+mu1 // eps1} (d-cs)^{-3/2+mu2 // eps2},
// since det = (a+tc)(d-cs) and the Jacobian db = (a+tc) ds is absorbed.
// A plain tensor rule is used when a+tc keeps one sign over the support and
// grid; otherwise the a-integral is cut to the exact sub-intervals allowed by
// the support and det margin, with log-graded oscillation panels.
enum class FiberStrategy { automatic, tensor, intervals };

KernelMatrix kernel_transform(const TestFunction& f, const PrincipalSeriesPoint& p,
                              const Grid1D& tgrid, const Grid1D& sgrid,
                              const FiberQuad& quad,
                              KernelDeriv mode = KernelDeriv::value,
                              unsigned threads = 0,
                              FiberStrategy strategy = FiberStrategy::automatic);

// Hilbert-Schmidt pairing of two kernels on matching grids.
cplx hs_inner(const KernelMatrix& k1, const KernelMatrix& k2);
double hs_norm(const KernelMatrix& k);

// int F1(g) conj(F2(g)) dmu(g) by 4D quadrature with the Haar weight.
cplx group_l2_inner(const TestFunction& f1, const TestFunction& f2,
                    const QuadSpec& quad);

// Principal-series action on a sampled function of t (barycentric
// interpolation at the moved nodes).
SampledFunction principal_action(const PrincipalSeriesPoint& p, const GroupElement& g,
                                 const SampledFunction& phi);

// ---------------------------------------------------------------------------
// Discrete series
// ---------------------------------------------------------------------------

struct DiscreteSeriesPoint {
    int n = 1;
    double tau = 0.0;
    int delta = 0;
};

// Which half-plane component of the representation space.
enum class HalfPlane { upper, lower };

struct DiskQuad {
    std::size_t radial = 28;
    std::size_t angular = 64;
    double edge = 1e-3;  // radial grid stops at 1 - edge
};

// Matrix of D_{n,tau,delta}(g) in the first N elements of the disk-model
// orthonormal basis (Cayley transform, monomials against (1-|w|^2)^{n-1}).
std::vector<cplx> ds_matrix(const DiscreteSeriesPoint& d, const GroupElement& g,
                            std::size_t N, HalfPlane half = HalfPlane::upper,
                            const DiskQuad& quad = {});

std::vector<cplx> ds_action(const DiscreteSeriesPoint& d, const GroupElement& g,
                            const std::vector<cplx>& coeffs, std::size_t N,
                            HalfPlane half = HalfPlane::upper,
                            const DiskQuad& quad = {});

// tr over the N-truncated basis of D(F)* D(F), with D(F) = int F(g) D(g) dmu,
// by 4D quadrature; both half-plane components are summed.
double ds_trace(const TestFunction& f, const DiscreteSeriesPoint& d, std::size_t N,
                std::size_t g_nodes = 12, const DiskQuad& quad = {},
                unsigned threads = 0);

// ---------------------------------------------------------------------------
// Parseval aggregation
// ---------------------------------------------------------------------------

struct SectorContribution {
    int eps1 = 0, eps2 = 0;
    double value = 0.0;
};

struct ParsevalReport {
    cplx lhs;                                    // group-side inner product
    std::vector<SectorContribution> principal;  // per parity sector
    double principal_total = 0.0;
    double discrete_total = 0.0;
    std::size_t discrete_truncation = 0;
    double ratio = 0.0;  // lhs / principal_total
    double tau_tail_fraction = 0.0;       // outermost 10% shell share
    double column_consistency = 0.0;      // diagonal-invariance residual
    bool tail_warning = false;
    std::string notes;
};

struct ParsevalOptions {
    std::size_t theta_nodes = 96;     // column grid (tan-compactified)
    std::size_t tau_nodes = 24;       // per tau axis
    std::size_t c_nodes = 20;
    double nodes_per_unit = 8.0;      // log-panel density for p,q integrals
    double tau_max = 6.0;
    std::size_t discrete_N = 12;      // truncation for the discrete check
    bool with_discrete = true;
    unsigned threads = 0;
};

// Plancherel aggregation over the four parity sectors and |tau_j| <= tau_max,
// for rotation-bi-invariant real test functions. Uses the exact rotation
// covariance of the kernel (its half-density modulus is constant along
// diagonal rotations), so only the s = 0 kernel column is integrated:
// ||K||_HS^2 = pi * int |K(t, 0)|^2 dt.
ParsevalReport parseval_principal(const TestFunction& f1, const TestFunction& f2,
                                  const ParsevalOptions& opts = {});

// ||K||^2_HS for an invariant function at one parameter point through the
// column rule; `column_shift` moves the anchored column for the invariance
// cross-check (phi0 = atan(s0)).
double invariant_hs_norm_sq(const TestFunction& f, const PrincipalSeriesPoint& p,
                            std::size_t theta_nodes, std::size_t c_nodes,
                            double nodes_per_unit, double s0 = 0.0);

// ---------------------------------------------------------------------------
// Serialization (cache format, version KMv1)
// ---------------------------------------------------------------------------

void write_kernel(std::ostream& os, const KernelMatrix& k);
KernelMatrix read_kernel(std::istream& is);
std::string kernel_cache_key(const std::string& fdesc, const PrincipalSeriesPoint& p,
                             const Grid1D& tgrid, const Grid1D& sgrid,
                             const std::string& quad_desc);

}  // namespace glharm::fourier
