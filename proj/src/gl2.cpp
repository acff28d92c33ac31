#include "glharm/gl2.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace glharm::gl2 {

using std::numbers::pi;

GroupElement GroupElement::inverse() const {
    double dt = det();
    if (dt == 0.0) throw std::domain_error("GroupElement: singular matrix");
    return {d / dt, -b / dt, -c / dt, a / dt};
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
}

GroupElement GroupElement::rotation(double theta) {
    double cs = std::cos(theta), sn = std::sin(theta);
    return {cs, -sn, sn, cs};
}

double haar_weight(const GroupElement& g) {
    double dt = g.det();
    if (dt == 0.0) throw std::domain_error("haar_weight: det = 0");
    return 1.0 / (dt * dt);
}

double mobius_act(const GroupElement& g, double t) {
    double den = g.a + t * g.c;
    if (std::abs(den) < 1e-14 * (std::abs(g.a) + std::abs(t * g.c) + 1.0))
        throw std::domain_error("mobius_act: pole at a + t c = 0");
    return (g.b + t * g.d) / den;
}

// ---------------------------------------------------------------------------
// TestFunction implementations
// ---------------------------------------------------------------------------

struct TestFunction::Impl {
    virtual ~Impl() = default;
    virtual double value(const GroupElement& g) const = 0;
    virtual Grad4 grad(const GroupElement&) const {
        throw std::logic_error("TestFunction: gradient not available");
    }
    virtual Hess4 hess(const GroupElement&) const {
        throw std::logic_error("TestFunction: hessian not available");
    }
    virtual bool has_grad() const { return false; }
    virtual bool has_hess() const { return false; }

    SupportBox box;
    double margin = 0.0;
    int sign = +1;
    std::string desc;
};

double TestFunction::value(const GroupElement& g) const { return impl_->value(g); }
Grad4 TestFunction::grad(const GroupElement& g) const { return impl_->grad(g); }
Hess4 TestFunction::hess(const GroupElement& g) const { return impl_->hess(g); }
bool TestFunction::has_grad() const { return impl_->has_grad(); }
bool TestFunction::has_hess() const { return impl_->has_hess(); }
const SupportBox& TestFunction::support() const { return impl_->box; }
double TestFunction::det_margin() const { return impl_->margin; }
int TestFunction::det_sign() const { return impl_->sign; }
const std::string& TestFunction::descriptor() const { return impl_->desc; }

namespace {

// exp(-1/(1-u^2)) on |u|<1 with two derivatives.
struct Bump {
    double v = 0, d1 = 0, d2 = 0;
};

Bump bump_eval(double u) {
    Bump r;
    double u2 = u * u;
    if (u2 >= 1.0) return r;
    double q = 1.0 - u2;
    double e = std::exp(-1.0 / q);
    double g1 = -2.0 * u / (q * q);               // (log e)' in u
    double g2 = -2.0 * (1.0 + 3.0 * u2) / (q * q * q);
    r.v = e;
    r.d1 = e * g1;
    r.d2 = e * (g1 * g1 + g2);
    return r;
}

// bump((x-c)/w) * x^m with derivatives in x
struct Factor {
    double v = 0, d1 = 0, d2 = 0;
};

Factor factor_eval(double x, double c, double w, int m) {
    Bump b = bump_eval((x - c) / w);
    Factor f;
    double bv = b.v, b1 = b.d1 / w, b2 = b.d2 / (w * w);
    if (m == 0) {
        f.v = bv;
        f.d1 = b1;
        f.d2 = b2;
        return f;
    }
    double xm = std::pow(x, m);
    double xm1 = m * std::pow(x, m - 1);
    double xm2 = (m >= 2) ? m * (m - 1) * std::pow(x, m - 2) : 0.0;
    f.v = xm * bv;
    f.d1 = xm1 * bv + xm * b1;
    f.d2 = xm2 * bv + 2.0 * xm1 * b1 + xm * b2;
    return f;
}

struct BoxBumpImpl final : TestFunction::Impl {
    std::array<double, 4> c, w;
    std::array<int, 4> m;
    double coef = 1.0;

    std::array<Factor, 4> factors(const GroupElement& g) const {
        return {factor_eval(g.a, c[0], w[0], m[0]), factor_eval(g.b, c[1], w[1], m[1]),
                factor_eval(g.c, c[2], w[2], m[2]), factor_eval(g.d, c[3], w[3], m[3])};
    }

    double value(const GroupElement& g) const override {
        double r = coef;
        const double xs[4] = {g.a, g.b, g.c, g.d};
        for (int i = 0; i < 4; ++i) {
            double u = (xs[i] - c[i]) / w[i];
            if (u * u >= 1.0) return 0.0;
            r *= factor_eval(xs[i], c[i], w[i], m[i]).v;
        }
        return r;
    }

    Grad4 grad(const GroupElement& g) const override {
        auto f = factors(g);
        Grad4 r;
        double* out[4] = {&r.da, &r.db, &r.dc, &r.dd};
        for (int i = 0; i < 4; ++i) {
            double p = coef;
            for (int j = 0; j < 4; ++j) p *= (j == i) ? f[j].d1 : f[j].v;
            *out[i] = p;
        }
        return r;
    }

    Hess4 hess(const GroupElement& g) const override {
        auto f = factors(g);
        auto entry = [&](int i, int j) {
            double p = coef;
            for (int k = 0; k < 4; ++k) {
                if (k == i && k == j)
                    p *= f[k].d2;
                else if (k == i || k == j)
                    p *= f[k].d1;
                else
                    p *= f[k].v;
            }
            return p;
        };
        Hess4 h;
        h.aa = entry(0, 0);
        h.ab = entry(0, 1);
        h.ac = entry(0, 2);
        h.ad = entry(0, 3);
        h.bb = entry(1, 1);
        h.bc = entry(1, 2);
        h.bd = entry(1, 3);
        h.cc = entry(2, 2);
        h.cd = entry(2, 3);
        h.dd = entry(3, 3);
        return h;
    }

    bool has_grad() const override { return true; }
    bool has_hess() const override { return true; }
};

double det_grad(int i, const GroupElement& g) {
    switch (i) {
        case 0: return g.d;
        case 1: return -g.c;
        case 2: return -g.b;
        default: return g.a;
    }
}

// second derivatives of det: only ad and bc mix
double det_hess(int i, int j) {
    if ((i == 0 && j == 3) || (i == 3 && j == 0)) return 1.0;
    if ((i == 1 && j == 2) || (i == 2 && j == 1)) return -1.0;
    return 0.0;
}

struct InvariantImpl final : TestFunction::Impl {
    double pc, pw, dc, dw;  // bump centers/halfwidths in ln(p) and ln(det)

    double value(const GroupElement& g) const override {
        double det = g.det();
        if (det <= 0.0) return 0.0;
        double p = g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d;
        double X = bump_eval((std::log(p) - pc) / pw).v;
        if (X == 0.0) return 0.0;
        return X * bump_eval((std::log(det) - dc) / dw).v;
    }

    Grad4 grad(const GroupElement& g) const override {
        Grad4 r;
        double det = g.det();
        if (det <= 0.0) return r;
        double p = g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d;
        Bump X = bump_eval((std::log(p) - pc) / pw);
        Bump Y = bump_eval((std::log(det) - dc) / dw);
        if (X.v == 0.0 || Y.v == 0.0) {
            // one factor vanishing kills the product and its derivative
            if (X.v == 0.0 && Y.v == 0.0) return r;
        }
        const double xs[4] = {g.a, g.b, g.c, g.d};
        double Xu = X.d1 / pw, Yv = Y.d1 / dw;
        double* out[4] = {&r.da, &r.db, &r.dc, &r.dd};
        for (int i = 0; i < 4; ++i) {
            double ui = 2.0 * xs[i] / p;            // d ln p
            double vi = det_grad(i, g) / det;       // d ln det
            *out[i] = Xu * ui * Y.v + X.v * Yv * vi;
        }
        return r;
    }

    Hess4 hess(const GroupElement& g) const override {
        Hess4 h;
        double det = g.det();
        if (det <= 0.0) return h;
        double p = g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d;
        Bump X = bump_eval((std::log(p) - pc) / pw);
        Bump Y = bump_eval((std::log(det) - dc) / dw);
        const double xs[4] = {g.a, g.b, g.c, g.d};
        double Xu = X.d1 / pw, Xuu = X.d2 / (pw * pw);
        double Yv = Y.d1 / dw, Yvv = Y.d2 / (dw * dw);
        double u[4], v[4];
        for (int i = 0; i < 4; ++i) {
            u[i] = 2.0 * xs[i] / p;
            v[i] = det_grad(i, g) / det;
        }
        auto entry = [&](int i, int j) {
            double uij = (i == j ? 2.0 / p : 0.0) - u[i] * u[j];
            double vij = det_hess(i, j) / det - v[i] * v[j];
            return Xuu * u[i] * u[j] * Y.v + Xu * uij * Y.v + Xu * u[i] * Yv * v[j] +
                   Xu * u[j] * Yv * v[i] + X.v * Yvv * v[i] * v[j] + X.v * Yv * vij;
        };
        h.aa = entry(0, 0);
        h.ab = entry(0, 1);
        h.ac = entry(0, 2);
        h.ad = entry(0, 3);
        h.bb = entry(1, 1);
        h.bc = entry(1, 2);
        h.bd = entry(1, 3);
        h.cc = entry(2, 2);
        h.cd = entry(2, 3);
        h.dd = entry(3, 3);
        return h;
    }

    bool has_grad() const override { return true; }
    bool has_hess() const override { return true; }
};

struct MonomialModImpl final : TestFunction::Impl {
    std::shared_ptr<const TestFunction::Impl> base;
    std::array<int, 4> pw{};
    double coef = 1.0;

    double mono(const GroupElement& g) const {
        return coef * std::pow(g.a, pw[0]) * std::pow(g.b, pw[1]) *
               std::pow(g.c, pw[2]) * std::pow(g.d, pw[3]);
    }
    Grad4 mono_grad(const GroupElement& g) const {
        const double xs[4] = {g.a, g.b, g.c, g.d};
        double out[4] = {0, 0, 0, 0};
        for (int i = 0; i < 4; ++i)
            if (pw[i] != 0)
                out[i] = coef * pw[i] * std::pow(xs[i], pw[i] - 1) * mono_without(g, i);
        return {out[0], out[1], out[2], out[3]};
    }
    double mono_without(const GroupElement& g, int skip) const {
        const double xs[4] = {g.a, g.b, g.c, g.d};
        double m = 1.0;
        for (int i = 0; i < 4; ++i)
            if (i != skip) m *= std::pow(xs[i], pw[i]);
        return m;
    }

    double value(const GroupElement& g) const override {
        double bv = base->value(g);
        return bv == 0.0 ? 0.0 : bv * mono(g);
    }
    Grad4 grad(const GroupElement& g) const override {
        double bv = base->value(g);
        Grad4 bg = base->grad(g);
        double m = mono(g);
        Grad4 mg = mono_grad(g);
        return {bg.da * m + bv * mg.da, bg.db * m + bv * mg.db,
                bg.dc * m + bv * mg.dc, bg.dd * m + bv * mg.dd};
    }
    bool has_grad() const override { return base->has_grad(); }
};

struct RotAvgImpl final : TestFunction::Impl {
    std::shared_ptr<const TestFunction::Impl> base;
    std::vector<GroupElement> rots;

    double value(const GroupElement& g) const override {
        double s = 0.0;
        for (const auto& u : rots)
            for (const auto& v : rots) s += base->value(u * g * v);
        return s / (static_cast<double>(rots.size()) * rots.size());
    }

    Grad4 grad(const GroupElement& g) const override {
        double acc[4] = {0, 0, 0, 0};
        for (const auto& u : rots)
            for (const auto& v : rots) {
                GroupElement h = u * g * v;
                Grad4 gh = base->grad(h);
                // chain rule through h = u g v: grad_g = u^T (dF) v^T
                double m[2][2] = {{gh.da, gh.db}, {gh.dc, gh.dd}};
                double um[2][2] = {{u.a * m[0][0] + u.c * m[1][0],
                                    u.a * m[0][1] + u.c * m[1][1]},
                                   {u.b * m[0][0] + u.d * m[1][0],
                                    u.b * m[0][1] + u.d * m[1][1]}};
                acc[0] += um[0][0] * v.a + um[0][1] * v.b;
                acc[1] += um[0][0] * v.c + um[0][1] * v.d;
                acc[2] += um[1][0] * v.a + um[1][1] * v.b;
                acc[3] += um[1][0] * v.c + um[1][1] * v.d;
            }
        double n2 = static_cast<double>(rots.size()) * rots.size();
        return {acc[0] / n2, acc[1] / n2, acc[2] / n2, acc[3] / n2};
    }

    bool has_grad() const override { return true; }
};

SupportBox box_of(const std::array<double, 4>& c, const std::array<double, 4>& w) {
    SupportBox b;
    for (int i = 0; i < 4; ++i) {
        b.lo[i] = c[i] - w[i];
        b.hi[i] = c[i] + w[i];
    }
    return b;
}

double box_det_margin(const SupportBox& b, int* sign) {
    // min |ad - bc| over the box, assuming the products keep a fixed order
    auto imin = [&](int i) { return b.lo[i]; };
    auto imax = [&](int i) { return b.hi[i]; };
    double ad_min = std::min(std::min(imin(0) * imin(3), imin(0) * imax(3)),
                             std::min(imax(0) * imin(3), imax(0) * imax(3)));
    double bc_max = std::max(std::max(imin(1) * imin(2), imin(1) * imax(2)),
                             std::max(imax(1) * imin(2), imax(1) * imax(2)));
    double ad_max = std::max(std::max(imin(0) * imin(3), imin(0) * imax(3)),
                             std::max(imax(0) * imin(3), imax(0) * imax(3)));
    double bc_min = std::min(std::min(imin(1) * imin(2), imin(1) * imax(2)),
                             std::min(imax(1) * imin(2), imax(1) * imax(2)));
    if (ad_min - bc_max > 0.0) {
        if (sign) *sign = +1;
        return ad_min - bc_max;
    }
    if (bc_min - ad_max > 0.0) {
        if (sign) *sign = -1;
        return bc_min - ad_max;
    }
    throw std::invalid_argument("TestFunction: support box does not avoid det = 0");
}

}  // namespace

TestFunction bump_box(const std::array<double, 4>& centers,
                      const std::array<double, 4>& halfwidths,
                      const std::array<int, 4>& monomial, double poly_coef) {
    auto impl = std::make_shared<BoxBumpImpl>();
    impl->c = centers;
    impl->w = halfwidths;
    impl->m = monomial;
    impl->coef = poly_coef;
    impl->box = box_of(centers, halfwidths);
    impl->margin = box_det_margin(impl->box, &impl->sign);
    std::ostringstream os;
    os << "bump_box[";
    for (int i = 0; i < 4; ++i) os << centers[i] << "," << halfwidths[i] << ";";
    os << "m=" << monomial[0] << monomial[1] << monomial[2] << monomial[3]
       << ",k=" << poly_coef << "]";
    impl->desc = os.str();
    return TestFunction(impl);
}

TestFunction invariant_bump(double lp_center, double lp_halfwidth, double ld_center,
                            double ld_halfwidth) {
    auto impl = std::make_shared<InvariantImpl>();
    impl->pc = lp_center;
    impl->pw = lp_halfwidth;
    impl->dc = ld_center;
    impl->dw = ld_halfwidth;
    double rmax = std::sqrt(std::exp(lp_center + lp_halfwidth));
    for (int i = 0; i < 4; ++i) {
        impl->box.lo[i] = -rmax;
        impl->box.hi[i] = rmax;
    }
    impl->margin = std::exp(ld_center - ld_halfwidth);
    impl->sign = +1;
    std::ostringstream os;
    os << "invariant[" << lp_center << "," << lp_halfwidth << "," << ld_center << ","
       << ld_halfwidth << "]";
    impl->desc = os.str();
    return TestFunction(impl);
}

double invariance_residual(const TestFunction& f, std::size_t probes) {
    const SupportBox& b = f.support();
    // base points spread over the middle of the support box; the orbit values
    // under off-grid rotation pairs should be constant
    const double angles[6] = {0.0, 0.271, 0.9423, 1.577, 2.1349, 2.9173};
    double vmax = 0.0, dev = 0.0;
    for (std::size_t k = 0; k < probes; ++k) {
        GroupElement g0;
        auto coord = [&](int i, double frac) {
            return b.lo[i] + (b.hi[i] - b.lo[i]) * (0.25 + 0.5 * frac);
        };
        g0.a = coord(0, std::fmod(0.17 + 0.37 * k, 1.0));
        g0.b = coord(1, std::fmod(0.49 + 0.61 * k, 1.0));
        g0.c = coord(2, std::fmod(0.11 + 0.43 * k, 1.0));
        g0.d = coord(3, std::fmod(0.83 + 0.29 * k, 1.0));
        double ref = f.value(g0);
        vmax = std::max(vmax, std::abs(ref));
        for (double a1 : angles)
            for (double a2 : {0.4133, 1.8221}) {
                GroupElement u = GroupElement::rotation(a1);
                GroupElement w = GroupElement::rotation(a2);
                double v = f.value(u * g0 * w);
                vmax = std::max(vmax, std::abs(v));
                dev = std::max(dev, std::abs(v - f.value(g0 * w)));
                dev = std::max(dev, std::abs(v - f.value(u * g0)));
            }
    }
    return vmax > 0.0 ? dev / vmax : 0.0;
}

TestFunction monomial_modulated(const TestFunction& base,
                                const std::array<int, 4>& powers, double coef) {
    auto impl = std::make_shared<MonomialModImpl>();
    impl->base = base.impl();
    impl->pw = powers;
    impl->coef = coef;
    impl->box = base.support();
    impl->margin = base.det_margin();
    impl->sign = base.det_sign();
    std::ostringstream os;
    os << "mono[" << powers[0] << powers[1] << powers[2] << powers[3] << "," << coef
       << "]" << base.descriptor();
    impl->desc = os.str();
    return TestFunction(impl);
}

TestFunction rotation_average(const TestFunction& base, std::size_t n_angles,
                              double tol) {
    for (std::size_t n = n_angles; n <= 8 * n_angles; n *= 2) {
        auto impl = std::make_shared<RotAvgImpl>();
        impl->base = base.impl();
        impl->rots.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
            impl->rots.push_back(GroupElement::rotation(2.0 * pi * k / n));
        // support: rotations preserve the Frobenius ball around the box
        double r = 0.0;
        const SupportBox& b = base.support();
        for (int i = 0; i < 4; ++i)
            r += std::max(b.lo[i] * b.lo[i], b.hi[i] * b.hi[i]);
        r = std::sqrt(r);
        for (int i = 0; i < 4; ++i) {
            impl->box.lo[i] = -r;
            impl->box.hi[i] = r;
        }
        impl->margin = base.det_margin();
        impl->sign = base.det_sign();
        std::ostringstream os;
        os << "rotavg[" << n << "]" << base.descriptor();
        impl->desc = os.str();
        TestFunction f(impl);
        if (invariance_residual(f) < tol) return f;
    }
    throw std::runtime_error("rotation_average: invariance residual did not reach tol");
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

std::string to_string(GeneratorId id) {
    switch (id) {
        case GeneratorId::e12: return "e12";
        case GeneratorId::e43: return "e43";
        case GeneratorId::e14: return "e14";
        case GeneratorId::e32: return "e32";
        case GeneratorId::mult_a: return "mult_a";
        case GeneratorId::mult_b: return "mult_b";
        case GeneratorId::mult_c: return "mult_c";
        case GeneratorId::mult_d: return "mult_d";
        case GeneratorId::mult_det_inv: return "mult_det_inv";
        case GeneratorId::d_db: return "d_db";
    }
    return "?";
}

namespace {

struct FirstOrderImpl final : TestFunction::Impl {
    std::shared_ptr<const TestFunction::Impl> base;
    FirstOrderOp op;

    double value(const GroupElement& g) const override {
        double r = 0.0;
        if (op.ca || op.cb || op.cc || op.cd) {
            Grad4 gr = base->grad(g);
            if (op.ca) r += op.ca(g) * gr.da;
            if (op.cb) r += op.cb(g) * gr.db;
            if (op.cc) r += op.cc(g) * gr.dc;
            if (op.cd) r += op.cd(g) * gr.dd;
        }
        if (op.mult) r += op.mult(g) * base->value(g);
        return r;
    }

    Grad4 grad(const GroupElement& g) const override {
        Hess4 h = base->hess(g);
        Grad4 gr = base->grad(g);
        double f = base->value(g);
        auto hrow = [&](int i) -> std::array<double, 4> {
            switch (i) {
                case 0: return {h.aa, h.ab, h.ac, h.ad};
                case 1: return {h.ab, h.bb, h.bc, h.bd};
                case 2: return {h.ac, h.bc, h.cc, h.cd};
                default: return {h.ad, h.bd, h.cd, h.dd};
            }
        };
        const double g1[4] = {gr.da, gr.db, gr.dc, gr.dd};
        double out[4] = {0, 0, 0, 0};
        const FirstOrderOp::Coef* cs[4] = {&op.ca, &op.cb, &op.cc, &op.cd};
        const FirstOrderOp::CoefGrad* gs[4] = {&op.ga, &op.gb, &op.gc, &op.gd};
        for (int i = 0; i < 4; ++i) {
            if (!*cs[i]) continue;
            double ci = (*cs[i])(g);
            Grad4 dci = (*gs[i]) ? (*gs[i])(g) : Grad4{};
            const double dc[4] = {dci.da, dci.db, dci.dc, dci.dd};
            auto row = hrow(i);
            for (int j = 0; j < 4; ++j) out[j] += dc[j] * g1[i] + ci * row[j];
        }
        if (op.mult) {
            double m = op.mult(g);
            Grad4 dm = op.gm ? op.gm(g) : Grad4{};
            const double dmv[4] = {dm.da, dm.db, dm.dc, dm.dd};
            for (int j = 0; j < 4; ++j) out[j] += dmv[j] * f + m * g1[j];
        }
        return {out[0], out[1], out[2], out[3]};
    }

    bool has_grad() const override { return base->has_hess(); }
};

}  // namespace

TestFunction apply_first_order(const FirstOrderOp& op, const TestFunction& f) {
    if (!f.has_grad())
        throw std::invalid_argument("apply_first_order: base lacks exact partials");
    auto impl = std::make_shared<FirstOrderImpl>();
    impl->base = f.impl();
    impl->op = op;
    impl->box = f.support();
    impl->margin = f.det_margin();
    impl->sign = f.det_sign();
    impl->desc = op.name + "(" + f.descriptor() + ")";
    return TestFunction(impl);
}

FirstOrderOp generator_op(GeneratorId id) {
    using G = GroupElement;
    FirstOrderOp op;
    op.name = to_string(id);
    switch (id) {
        case GeneratorId::e12:
            // Fourier partner of d/dt. (The first-order coefficients are the
            // left-translation field -c d/da - d d/db.)
            op.ca = [](const G& g) { return -g.c; };
            op.cb = [](const G& g) { return -g.d; };
            op.ga = [](const G&) { return Grad4{0, 0, -1, 0}; };
            op.gb = [](const G&) { return Grad4{0, 0, 0, -1}; };
            break;
        case GeneratorId::e43:
            op.ca = [](const G& g) { return g.b; };
            op.cc = [](const G& g) { return g.d; };
            op.ga = [](const G&) { return Grad4{0, 1, 0, 0}; };
            op.gc = [](const G&) { return Grad4{0, 0, 0, 1}; };
            break;
        case GeneratorId::e14:
            op.cb = [](const G&) { return 1.0; };
            op.gb = [](const G&) { return Grad4{}; };
            op.mult = [](const G& g) { return g.c / g.det(); };
            op.gm = [](const G& g) {
                double dt = g.det(), dt2 = dt * dt;
                return Grad4{-g.c * g.d / dt2, g.c * g.c / dt2,
                             1.0 / dt + g.c * g.b / dt2, -g.c * g.a / dt2};
            };
            break;
        case GeneratorId::e32:
            op.ca = [](const G& g) { return -g.a * g.c; };
            op.cb = [](const G& g) { return -g.a * g.d; };
            op.cc = [](const G& g) { return -g.c * g.c; };
            op.cd = [](const G& g) { return -g.c * g.d; };
            op.ga = [](const G& g) { return Grad4{-g.c, 0, -g.a, 0}; };
            op.gb = [](const G& g) { return Grad4{-g.d, 0, 0, -g.a}; };
            op.gc = [](const G& g) { return Grad4{0, 0, -2.0 * g.c, 0}; };
            op.gd = [](const G& g) { return Grad4{0, 0, -g.d, -g.c}; };
            op.mult = [](const G& g) { return -g.c; };
            op.gm = [](const G&) { return Grad4{0, 0, -1, 0}; };
            break;
        case GeneratorId::mult_a:
            op.mult = [](const G& g) { return g.a; };
            op.gm = [](const G&) { return Grad4{1, 0, 0, 0}; };
            break;
        case GeneratorId::mult_b:
            op.mult = [](const G& g) { return g.b; };
            op.gm = [](const G&) { return Grad4{0, 1, 0, 0}; };
            break;
        case GeneratorId::mult_c:
            op.mult = [](const G& g) { return g.c; };
            op.gm = [](const G&) { return Grad4{0, 0, 1, 0}; };
            break;
        case GeneratorId::mult_d:
            op.mult = [](const G& g) { return g.d; };
            op.gm = [](const G&) { return Grad4{0, 0, 0, 1}; };
            break;
        case GeneratorId::mult_det_inv:
            op.mult = [](const G& g) { return 1.0 / g.det(); };
            op.gm = [](const G& g) {
                double dt2 = g.det() * g.det();
                return Grad4{-g.d / dt2, g.c / dt2, g.b / dt2, -g.a / dt2};
            };
            break;
        case GeneratorId::d_db:
            op.cb = [](const G&) { return 1.0; };
            op.gb = [](const G&) { return Grad4{}; };
            break;
    }
    return op;
}

TestFunction apply_generator(GeneratorId id, const TestFunction& f) {
    return apply_first_order(generator_op(id), f);
}

// ---------------------------------------------------------------------------
// Convolution and group integrals
// ---------------------------------------------------------------------------

cplx integrate_group(const std::function<cplx(const GroupElement&)>& f,
                     const QuadSpec& spec) {
    spec.validate();
    if (spec.counts.size() != 4)
        throw std::invalid_argument("integrate_group: QuadSpec must be 4D");
    std::array<numerics::Grid1D, 4> gr;
    for (int i = 0; i < 4; ++i)
        gr[i] = numerics::gauss_legendre(spec.counts[i], spec.box[i].first,
                                         spec.box[i].second);
    cplx sum = 0.0, comp = 0.0;
    for (std::size_t ia = 0; ia < gr[0].size(); ++ia)
        for (std::size_t ib = 0; ib < gr[1].size(); ++ib)
            for (std::size_t ic = 0; ic < gr[2].size(); ++ic)
                for (std::size_t id = 0; id < gr[3].size(); ++id) {
                    GroupElement g{gr[0].nodes[ia], gr[1].nodes[ib], gr[2].nodes[ic],
                                   gr[3].nodes[id]};
                    double w = gr[0].weights[ia] * gr[1].weights[ib] *
                               gr[2].weights[ic] * gr[3].weights[id];
                    cplx y = w * f(g) - comp;
                    cplx t = sum + y;
                    comp = (t - sum) - y;
                    sum = t;
                }
    return sum;
}

QuadSpec support_quad(const TestFunction& f, std::size_t n) {
    QuadSpec q;
    const SupportBox& b = f.support();
    for (int i = 0; i < 4; ++i) {
        q.counts.push_back(n);
        q.box.emplace_back(b.lo[i], b.hi[i]);
    }
    return q;
}

QuadSpec support_quad2(const TestFunction& f1, const TestFunction& f2, std::size_t n) {
    QuadSpec q;
    const SupportBox& a = f1.support();
    const SupportBox& b = f2.support();
    for (int i = 0; i < 4; ++i) {
        q.counts.push_back(n);
        q.box.emplace_back(std::min(a.lo[i], b.lo[i]), std::max(a.hi[i], b.hi[i]));
    }
    return q;
}

namespace {

struct ConvNode {
    GroupElement inv;  // inverse of the quadrature node
    double weight;     // F_pinned(node) w / det(node)^2
};

std::vector<ConvNode> conv_nodes(const TestFunction& pinned, std::size_t n) {
    QuadSpec q = support_quad(pinned, n);
    std::array<numerics::Grid1D, 4> gr;
    for (int i = 0; i < 4; ++i)
        gr[i] = numerics::gauss_legendre(q.counts[i], q.box[i].first, q.box[i].second);
    std::vector<ConvNode> nodes;
    nodes.reserve(n * n * n * n);
    for (std::size_t ia = 0; ia < gr[0].size(); ++ia)
        for (std::size_t ib = 0; ib < gr[1].size(); ++ib)
            for (std::size_t ic = 0; ic < gr[2].size(); ++ic)
                for (std::size_t id = 0; id < gr[3].size(); ++id) {
                    GroupElement h{gr[0].nodes[ia], gr[1].nodes[ib], gr[2].nodes[ic],
                                   gr[3].nodes[id]};
                    double v = pinned.value(h);
                    if (v == 0.0) continue;
                    double w = gr[0].weights[ia] * gr[1].weights[ib] *
                               gr[2].weights[ic] * gr[3].weights[id];
                    nodes.push_back({h.inverse(), v * w * haar_weight(h)});
                }
    return nodes;
}

// (F1 * F2)(g) = int F1(h) F2(h^-1 g) dmu(h); by invariance of dmu the
// integral may equally run over k = h^-1 g in the support of F2, which is the
// better-resolved choice when F2 is the narrow factor.
struct ConvImpl final : TestFunction::Impl {
    std::shared_ptr<const TestFunction::Impl> other;
    std::vector<ConvNode> nodes;
    bool pinned_first = true;  // nodes sample supp F1, evaluate F2(h^-1 g)

    double value(const GroupElement& g) const override {
        double s = 0.0;
        if (pinned_first)
            for (const auto& n : nodes) s += n.weight * other->value(n.inv * g);
        else
            for (const auto& n : nodes) s += n.weight * other->value(g * n.inv);
        return s;
    }
};

SupportBox product_box(const SupportBox& x, const SupportBox& y) {
    // interval product of 2x2 matrix entries
    auto imul = [](double alo, double ahi, double blo, double bhi) {
        double v[4] = {alo * blo, alo * bhi, ahi * blo, ahi * bhi};
        return std::pair<double, double>{std::min(std::min(v[0], v[1]), std::min(v[2], v[3])),
                                         std::max(std::max(v[0], v[1]), std::max(v[2], v[3]))};
    };
    // g = h k: a = a_h a_k + b_h c_k, etc.
    auto add = [](std::pair<double, double> p, std::pair<double, double> q) {
        return std::pair<double, double>{p.first + q.first, p.second + q.second};
    };
    SupportBox r;
    auto set = [&](int idx, std::pair<double, double> v) {
        r.lo[idx] = v.first;
        r.hi[idx] = v.second;
    };
    set(0, add(imul(x.lo[0], x.hi[0], y.lo[0], y.hi[0]),
               imul(x.lo[1], x.hi[1], y.lo[2], y.hi[2])));
    set(1, add(imul(x.lo[0], x.hi[0], y.lo[1], y.hi[1]),
               imul(x.lo[1], x.hi[1], y.lo[3], y.hi[3])));
    set(2, add(imul(x.lo[2], x.hi[2], y.lo[0], y.hi[0]),
               imul(x.lo[3], x.hi[3], y.lo[2], y.hi[2])));
    set(3, add(imul(x.lo[2], x.hi[2], y.lo[1], y.hi[1]),
               imul(x.lo[3], x.hi[3], y.lo[3], y.hi[3])));
    return r;
}

}  // namespace

TestFunction convolution_function(const TestFunction& f1, const TestFunction& f2,
                                  std::size_t inner_nodes) {
    if (f1.det_sign() == 0 || f2.det_sign() == 0)
        throw std::invalid_argument("convolve: factors need definite det sign");
    auto impl = std::make_shared<ConvImpl>();
    auto volume = [](const SupportBox& b) {
        double v = 1.0;
        for (int i = 0; i < 4; ++i) v *= b.hi[i] - b.lo[i];
        return v;
    };
    // pin the quadrature to the smaller support
    if (volume(f1.support()) <= volume(f2.support())) {
        impl->pinned_first = true;
        impl->other = f2.impl();
        impl->nodes = conv_nodes(f1, inner_nodes);
    } else {
        impl->pinned_first = false;
        impl->other = f1.impl();
        impl->nodes = conv_nodes(f2, inner_nodes);
    }
    impl->box = product_box(f1.support(), f2.support());
    impl->margin = f1.det_margin() * f2.det_margin();
    impl->sign = f1.det_sign() * f2.det_sign();
    impl->desc = "conv(" + f1.descriptor() + "," + f2.descriptor() + ")";
    return TestFunction(impl);
}

Sampled4D convolve(const TestFunction& f1, const TestFunction& f2,
                   const std::array<numerics::Grid1D, 4>& out_grids,
                   const QuadSpec& inner) {
    inner.validate();
    if (inner.counts.size() != 4)
        throw std::invalid_argument("convolve: inner QuadSpec must be 4D");
    TestFunction conv = convolution_function(f1, f2, inner.counts[0]);
    Sampled4D out;
    out.grids = out_grids;
    std::size_t n0 = out_grids[0].size(), n1 = out_grids[1].size(),
                n2 = out_grids[2].size(), n3 = out_grids[3].size();
    out.values.resize(n0 * n1 * n2 * n3);
    std::size_t idx = 0;
    for (std::size_t ia = 0; ia < n0; ++ia)
        for (std::size_t ib = 0; ib < n1; ++ib)
            for (std::size_t ic = 0; ic < n2; ++ic)
                for (std::size_t id = 0; id < n3; ++id) {
                    GroupElement g{out_grids[0].nodes[ia], out_grids[1].nodes[ib],
                                   out_grids[2].nodes[ic], out_grids[3].nodes[id]};
                    out.values[idx++] = conv.value(g);
                }
    return out;
}

}  // namespace glharm::gl2
