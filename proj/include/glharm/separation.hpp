#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "glharm/gl2.hpp"
#include "glharm/numerics.hpp"

namespace glharm::separation {

using gl2::GroupElement;
using numerics::cplx;
using numerics::Grid1D;
using numerics::SampledFunction;

// Radix-2 FFT, in place; size must be a power of two.
void fft_inplace(std::vector<cplx>& a, bool inverse);

enum class HardySign { plus, minus };

// The four tensor blocks (sign of the frequency support per variable).
struct HardyComponent {
    HardySign s1 = HardySign::plus;
    HardySign s2 = HardySign::plus;
};

struct BandReport {
    double high_band_fraction = 0.0;  // energy share in the outer 10% band
    bool ok = true;
};

// Raised-cosine taper on the outer `frac` of the spatial window (applied to
// inputs before spectral work to control wrap-around leakage).
SampledFunction edge_taper(const SampledFunction& f, double frac = 0.05);

// One-sided frequency mask on a uniform grid: keep the chosen sign, half
// weight at zero (and Nyquist) frequency.
SampledFunction hardy_project(const SampledFunction& f, HardySign sign,
                              BandReport* band = nullptr);

// T(g) f(x) = f((b+xd)/(a+xc)) (a+xc)^{-1} by local polynomial interpolation.
SampledFunction sl2_T_action(const GroupElement& g, const SampledFunction& f);

// Invariant density |x1-x2|^{-2} on the x1 != x2 chart of the hyperboloid.
double hyperboloid_weight(double x1, double x2);

// J f(x1,x2) = f(x1,x2) (x1-x2)^{-1}; grid must avoid the diagonal.
SampledFunction J_map(const SampledFunction& f);
SampledFunction J_map_inverse(const SampledFunction& f);

// Q(g) f(x1,x2) = f(g x1, g x2) (a+c x1)^{-1} (a+c x2)^{-1}.
SampledFunction Q_action(const GroupElement& g, const SampledFunction& f);

// hardy_project along each axis with the component signs.
SampledFunction block_project(const SampledFunction& f, HardyComponent comp,
                              BandReport* band = nullptr);

// ---------------------------------------------------------------------------
// O(1,q) and spheres
// ---------------------------------------------------------------------------

// Element of the identity component of O(1,q): (1+q)x(1+q) matrix preserving
// -x0 y0 + sum x_i y_i, with a > 0, det = +1. Row vectors act on the right.
class LorentzElement {
  public:
    LorentzElement(int q, std::vector<double> rowmajor);
    static LorentzElement identity(int q);
    static LorentzElement boost(int q, int axis, double rapidity);
    static LorentzElement spatial_rotation(int q, int i, int j, double angle);
    LorentzElement operator*(const LorentzElement& o) const;

    int q() const { return q_; }
    double at(int i, int j) const { return m_[i * (q_ + 1) + j]; }
    // block pieces in the (a b; c d) sense
    double block_a() const { return at(0, 0); }

  private:
    int q_;
    std::vector<double> m_;
    void validate() const;
};

using Vec3 = std::array<double, 3>;  // embedded sphere point, tail zero-padded

// Conformal action on S^{q-1}: x -> (a + x c)^{-1} (b + x d); returns the
// mapped point and the dilatation coefficient (a + x c)^{-1}.
std::pair<Vec3, double> lorentz_sphere_action(const LorentzElement& g, const Vec3& x,
                                              int q);

// Quadrature on S^{q-1}: q=2 uniform angles, q=3 Gauss-Legendre in cos(theta)
// times uniform azimuth. `offset` shifts the grid (half-cell shifts for the
// singular-kernel product rules; also keeps nodes off the equator x_q = 0).
struct SphereGrid {
    int q = 2;
    std::vector<Vec3> points;
    std::vector<double> weights;
    // native coordinates for interpolation: q=2 angle; q=3 (u=cos theta, phi)
    std::vector<double> coord0, coord1;
    std::size_t n0 = 0, n1 = 0;

    std::size_t size() const { return points.size(); }
    static SphereGrid make(int q, std::size_t n0, std::size_t n1 = 0,
                           double offset = 0.0);
    double area() const;
};

struct SphereFunction {
    SphereGrid grid;
    std::vector<cplx> values;
};

SphereFunction sample_sphere(const SphereGrid& g,
                             const std::function<cplx(const Vec3&)>& f);

// Parameters of the spherical representations; `lambda` is s (real,
// complementary) or i sigma (principal). The kernel convention flag picks the
// Gram exponent reading.
struct ComplementaryParams {
    int q = 2;
    double s = 0.25;
    double sigma = 0.0;
    bool principal = false;
    enum class KernelConvention { sobolev, verbatim };
    KernelConvention convention = KernelConvention::sobolev;

    void validate() const;
    double gram_exponent() const;     // denominator exponent of ||x1-x2||
    double equator_exponent() const;  // same for the equator pairing
};

// T_lambda(g) f(x) = (a+xc)^{-(q-1)/2 + lambda} f(g x); `lambda_sign` flips
// the sign of the real parameter s (the two readings of the displayed
// formula; T_s and T_{-s} are equivalent).
SphereFunction comp_action(const ComplementaryParams& p, const LorentzElement& g,
                           const SphereFunction& f, int lambda_sign = +1);

// <f1, f2>_s by the symmetric-offset product rule at `level` (grids double
// with each level).
cplx comp_gram(const ComplementaryParams& p,
               const std::function<cplx(const Vec3&)>& f1,
               const std::function<cplx(const Vec3&)>& f2, int level = 0);

// Same pairing with already-transformed samples on the two offset copies.
cplx comp_gram_sampled(const ComplementaryParams& p, const SphereFunction& f1,
                       const SphereFunction& f2);

// the two offset sphere copies used by comp_gram at a level
std::pair<SphereGrid, SphereGrid> gram_grids(int q, int level);

struct EquatorGramResult {
    cplx value{0.0};
    std::vector<double> refinements;  // values at successive grid doublings
    bool diverged = false;
    double growth = 0.0;  // |I_{k+1} - I_k| ratio across refinements
};

// ||phi delta_Eq||^2-type pairing on the equator S^{q-2}; deriv_order 1 pairs
// the normal derivative of the delta through second-order off-equator
// differences. Divergence is detected by non-stabilizing refinement.
EquatorGramResult equator_delta_gram(const ComplementaryParams& p,
                                     const std::function<cplx(const Vec3&)>& phi1,
                                     const std::function<cplx(const Vec3&)>& phi2,
                                     int deriv_order = 0, int levels = 4,
                                     std::size_t base_nodes = 64);

enum class JExponent { verbatim, intertwine_minus_s, intertwine_plus_s };

// Multiplier |x_q|^e f(x); the exponent reading is selected explicitly.
SphereFunction restriction_J(const ComplementaryParams& p, const SphereFunction& f,
                             JExponent mode);
double j_exponent(const ComplementaryParams& p, JExponent mode);

}  // namespace glharm::separation
