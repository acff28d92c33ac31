#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "glharm/numerics.hpp"

namespace glharm::gl2 {

using numerics::cplx;
using numerics::QuadSpec;

struct GroupElement {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    double det() const { return a * d - b * c; }
    GroupElement inverse() const;
    GroupElement operator*(const GroupElement& o) const;
    static GroupElement identity() { return {}; }
    static GroupElement rotation(double theta);
    static GroupElement diagonal(double l1, double l2) { return {l1, 0.0, 0.0, l2}; }
};

// Standard left-right invariant density da db dc dd / det^2.
double haar_weight(const GroupElement& g);

// (b + t d) / (a + t c); throws at the pole a + t c = 0.
double mobius_act(const GroupElement& g, double t);

struct Grad4 {
    double da = 0, db = 0, dc = 0, dd = 0;
};

// Symmetric second derivatives.
struct Hess4 {
    double aa = 0, ab = 0, ac = 0, ad = 0, bb = 0, bc = 0, bd = 0, cc = 0, cd = 0,
           dd = 0;
};

struct SupportBox {
    std::array<double, 4> lo{};  // order a, b, c, d
    std::array<double, 4> hi{};
};

// Closed-form smooth compactly supported function on GL(2,R) with exact
// first (and usually second) partial derivatives, a known support box, and a
// certified margin |det| >= det_margin on the support.
class TestFunction {
  public:
    struct Impl;
    explicit TestFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    double value(const GroupElement& g) const;
    double value4(double a, double b, double c, double d) const {
        return value(GroupElement{a, b, c, d});
    }
    Grad4 grad(const GroupElement& g) const;
    Hess4 hess(const GroupElement& g) const;
    bool has_grad() const;
    bool has_hess() const;

    const SupportBox& support() const;
    double det_margin() const;
    int det_sign() const;  // +1 or -1, the sign of det on the support
    const std::string& descriptor() const;

    const std::shared_ptr<const Impl>& impl() const { return impl_; }

  private:
    std::shared_ptr<const Impl> impl_;
};

// Separable product of C-infinity bumps exp(-1/(1-u^2)) in each coordinate,
// optionally times a monomial a^i b^j c^k d^l. Default placement keeps the
// support inside {a in [1,2], b,c in [-1/2,1/2], d in [1,2]}, so det >= 3/4.
TestFunction bump_box(const std::array<double, 4>& centers,
                      const std::array<double, 4>& halfwidths,
                      const std::array<int, 4>& monomial = {0, 0, 0, 0},
                      double poly_coef = 1.0);

// Rotation-bi-invariant bump chi(|g|_F^2) eta(det g) in closed form; chi and
// eta are bumps in the logs of their arguments. Exactly invariant under
// g -> u g v for rotations u, v.
TestFunction invariant_bump(double lp_center, double lp_halfwidth, double ld_center,
                            double ld_halfwidth);

// base times coef * a^i b^j c^k d^l (product rule partials).
TestFunction monomial_modulated(const TestFunction& base,
                                const std::array<int, 4>& powers, double coef = 1.0);

// Average of `base` over an n x n grid of rotation pairs. The constructor
// doubles n until the measured invariance residual drops below `tol`.
TestFunction rotation_average(const TestFunction& base, std::size_t n_angles = 32,
                              double tol = 1e-10);

// max over probe rotations of |F(u g v) - F(g)| / max|F|, on sample points.
double invariance_residual(const TestFunction& f, std::size_t probes = 24);

enum class GeneratorId {
    e12,
    e43,
    e14,
    e32,
    mult_a,
    mult_b,
    mult_c,
    mult_d,
    mult_det_inv,
    d_db
};

std::string to_string(GeneratorId id);

// First-order operator sum c_a da + c_b db + c_c dc + c_d dd + m, with
// rational-in-(a,b,c,d) coefficient fields; used to realize the generators
// and their variants. Gradients of the coefficients are optional and only
// needed when exact partials of the applied function are requested.
struct FirstOrderOp {
    using Coef = std::function<double(const GroupElement&)>;
    using CoefGrad = std::function<Grad4(const GroupElement&)>;
    Coef ca, cb, cc, cd;  // any may be null (= 0)
    Coef mult;            // multiplier term, may be null
    CoefGrad ga, gb, gc, gd, gm;
    std::string name;
};

TestFunction apply_first_order(const FirstOrderOp& op, const TestFunction& f);

// The generator (or multiplication operator) applied to F, as a new
// closed-form function using F's exact partials.
TestFunction apply_generator(GeneratorId id, const TestFunction& f);

// The operator for `id` as an explicit first-order operator.
FirstOrderOp generator_op(GeneratorId id);

// 4D sampled values on a tensor grid in (a, b, c, d).
struct Sampled4D {
    std::array<numerics::Grid1D, 4> grids;
    std::vector<cplx> values;  // index = ((ia*n1+ib)*n2+ic)*n3+id
};

// (F1 * F2)(g) = int F1(h) F2(h^-1 g) dmu(h) on each output node.
Sampled4D convolve(const TestFunction& f1, const TestFunction& f2,
                   const std::array<numerics::Grid1D, 4>& out_grids,
                   const QuadSpec& inner);

// Convolution as an evaluate-on-demand function (value only; no derivatives).
TestFunction convolution_function(const TestFunction& f1, const TestFunction& f2,
                                  std::size_t inner_nodes);

// Lebesgue integral over the 4D box of `spec` (callers fold in haar_weight).
cplx integrate_group(const std::function<cplx(const GroupElement&)>& f,
                     const QuadSpec& spec);

// Box hull of the supports, with n nodes per axis.
QuadSpec support_quad(const TestFunction& f, std::size_t n);
QuadSpec support_quad2(const TestFunction& f1, const TestFunction& f2, std::size_t n);

}  // namespace glharm::gl2
