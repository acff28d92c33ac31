#include "glharm/kltransform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "glharm/specfun.hpp"

namespace glharm::kl {

using specfun::kl_weight;
using specfun::macdonald_bessel;
using specfun::macdonald_bessel_complex;
using specfun::macdonald_bessel_full;
using std::numbers::pi;

// ---------------------------------------------------------------------------
// StripFunction
// ---------------------------------------------------------------------------

cplx StripFunction::value(cplx s) const {
    if (std::abs(s.imag()) > 1.0 + 0.5)
        throw std::domain_error("StripFunction: outside the strip");
    switch (kind_) {
        case Kind::gauss_cos: return std::exp(-p0_ * s * s) * std::cos(p1_ * s);
        case Kind::kbessel: return macdonald_bessel_complex(s, p0_);
    }
    return 0.0;
}

void StripFunction::certify() {
    // measured minimal C over sample rays; doubles resolve |F| only down to
    // ~1e-17 absolute, so the samples stop where the bound would underflow it
    double C = 0.0;
    for (int ray = -1; ray <= 1; ++ray) {
        double im = ray * 1.05;
        for (int k = 0; k < 50; ++k) {
            double re = 0.4 + 0.22 * k;  // up to ~11
            cplx v = value(cplx(re, im));
            double bound = std::exp(-pi * re) * std::pow(re, -1.5 - eps_);
            if (bound < 1e-14) continue;
            C = std::max(C, std::abs(v) / bound);
        }
    }
    C_ = C;
}

StripFunction StripFunction::gauss_cos(double alpha, double beta, double eps) {
    if (!(alpha > 0.0)) throw std::invalid_argument("gauss_cos: alpha must be > 0");
    StripFunction f;
    f.kind_ = Kind::gauss_cos;
    f.p0_ = alpha;
    f.p1_ = beta;
    f.eps_ = eps;
    std::ostringstream os;
    os << "gauss_cos[" << alpha << "," << beta << "]";
    f.desc_ = os.str();
    f.certify();
    return f;
}

StripFunction StripFunction::kbessel(double x0, double eps) {
    if (!(x0 > 0.0)) throw std::invalid_argument("kbessel: x0 must be > 0");
    StripFunction f;
    f.kind_ = Kind::kbessel;
    f.p0_ = x0;
    f.eps_ = eps;
    std::ostringstream os;
    os << "kbessel[" << x0 << "]";
    f.desc_ = os.str();
    f.certify();
    return f;
}

// ---------------------------------------------------------------------------
// HalfLineFunction
// ---------------------------------------------------------------------------

HalfLineFunction::HalfLineFunction(double gamma, double alpha, double beta,
                                   double scale)
    : gamma_(gamma), alpha_(alpha), beta_(beta), scale_(scale) {
    if (!(alpha > 0.0) || !(beta >= 0.0))
        throw std::invalid_argument("HalfLineFunction: need alpha > 0, beta >= 0");
    std::ostringstream os;
    os << "halfline[" << gamma << "," << alpha << "," << beta << "," << scale << "]";
    desc_ = os.str();
}

double HalfLineFunction::value(double x) const {
    if (!(x > 0.0)) throw std::domain_error("HalfLineFunction: x must be > 0");
    return scale_ * std::pow(x, gamma_) * std::exp(-alpha_ * x - beta_ / x);
}

double HalfLineFunction::d1(double x) const {
    double u = gamma_ / x - alpha_ + beta_ / (x * x);
    return value(x) * u;
}

double HalfLineFunction::d2(double x) const {
    double u = gamma_ / x - alpha_ + beta_ / (x * x);
    double du = -gamma_ / (x * x) - 2.0 * beta_ / (x * x * x);
    return value(x) * (u * u + du);
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

namespace {

// log-axis composite rule adapted to oscillation rate
Grid1D log_axis(double lo, double hi, double rate, double npu) {
    double len = std::log(hi) - std::log(lo);
    double per_panel = std::max(0.3, 4.0 / std::max(rate, 1.0));
    std::size_t panels =
        static_cast<std::size_t>(std::max(1.0, std::ceil(len / per_panel)));
    std::size_t nper =
        static_cast<std::size_t>(std::max(6.0, std::ceil(npu * per_panel)));
    return numerics::composite_gauss(nper, panels, std::log(lo), std::log(hi));
}

double kl_direct_at(const HalfLineFunction& f, double s, double xmin, double xmax,
                    double npu) {
    Grid1D ax = log_axis(xmin, xmax, s, npu);
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        double x = std::exp(ax.nodes[i]);
        double term = macdonald_bessel(s, x) * f.value(x) * ax.weights[i];
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

KlResult kl_direct(const HalfLineFunction& f, const Grid1D& sgrid, const KlQuad& q) {
    sgrid.validate();
    KlResult res;
    res.values.grids = {sgrid};
    res.values.values.resize(sgrid.size());
    for (std::size_t i = 0; i < sgrid.size(); ++i)
        res.values.values[i] =
            kl_direct_at(f, sgrid.nodes[i], q.xmin, q.xmax, q.nodes_per_unit);
    // tail estimates at a mid-grid s: compare against enlarged boxes
    double s_probe = sgrid.nodes[sgrid.size() / 3];
    double base = kl_direct_at(f, s_probe, q.xmin, q.xmax, q.nodes_per_unit);
    double wider_lo = kl_direct_at(f, s_probe, q.xmin / 2.0, q.xmax, q.nodes_per_unit);
    double wider_hi = kl_direct_at(f, s_probe, q.xmin, q.xmax * 1.25, q.nodes_per_unit);
    res.tail_low = std::abs(wider_lo - base);
    res.tail_high = std::abs(wider_hi - base);
    double scale = std::abs(base) + 1e-300;
    res.tail_warning = (res.tail_low + res.tail_high) > 0.01 * scale;
    return res;
}

SampledFunction kl_inverse(const SampledFunction& g, const Grid1D& xgrid,
                           double calibration, const KlQuad& q) {
    g.validate();
    xgrid.validate();
    if (g.rank() != 1) throw std::invalid_argument("kl_inverse: 1D sample expected");
    const Grid1D& sg = g.grids[0];
    (void)q;
    SampledFunction out;
    out.grids = {xgrid};
    out.values.resize(xgrid.size());
    // integrate on the grid g is sampled on; the oscillation rate of
    // K_{is}(x) in s is |log(x/2)|, which the caller's s-grid must resolve
    for (std::size_t i = 0; i < xgrid.size(); ++i) {
        double x = xgrid.nodes[i];
        cplx sum = 0.0, comp = 0.0;
        for (std::size_t k = 0; k < sg.size(); ++k) {
            double s = sg.nodes[k];
            cplx term =
                kl_weight(s) * macdonald_bessel(s, x) * g.values[k] * sg.weights[k];
            cplx y = term - comp;
            cplx t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        out.values[i] = calibration * sum;
    }
    return out;
}

double apply_D(const HalfLineFunction& f, double x) {
    if (!(x > 0.0)) throw std::domain_error("apply_D: x must be > 0");
    return x * x * f.d2(x) + x * f.d1(x) - x * x * f.value(x);
}

double apply_D_bessel(double tau, double x) {
    auto k = macdonald_bessel_full(tau, x);
    return x * x * k.dxx + x * k.dx - x * x * k.value;
}

cplx apply_M(const StripFunction& f, double s) {
    if (s == 0.0) throw std::domain_error("apply_M: s = 0 rejected");
    const cplx i(0.0, 1.0);
    return (f.value(cplx(s, 1.0)) - f.value(cplx(s, -1.0))) / (i * s);
}

BispectralReport bispectral_report(const std::vector<double>& taus,
                                   const std::vector<double>& xs) {
    BispectralReport rep;
    double kmax = 0.0;
    for (double tau : taus)
        for (double x : xs) kmax = std::max(kmax, std::abs(macdonald_bessel(tau, x)));
    if (kmax == 0.0) kmax = 1.0;

    bool d_consistent = true, m_consistent = true;
    for (double tau : taus) {
        for (double x : xs) {
            BispectralRow row;
            row.x = x;
            row.tau = tau;
            double K = macdonald_bessel(tau, x);
            double DK = apply_D_bessel(tau, x);
            row.d_sign = (DK * K < 0.0) ? -1 : +1;  // eigenvalue sign vs +tau^2 K
            row.d_resid = std::abs(DK - row.d_sign * tau * tau * K) / kmax;

            StripFunction F = StripFunction::kbessel(x);
            cplx MK = apply_M(F, tau);
            double target = (2.0 / x) * macdonald_bessel(tau, x);
            row.m_sign = (MK.real() * target < 0.0) ? -1 : +1;
            row.m_resid = std::abs(MK - cplx(row.m_sign * target, 0.0)) / kmax;

            if (rep.rows.empty()) {
                rep.d_sign = row.d_sign;
                rep.m_sign = row.m_sign;
            } else {
                if (row.d_sign != rep.d_sign) d_consistent = false;
                if (row.m_sign != rep.m_sign) m_consistent = false;
            }
            rep.max_d_resid = std::max(rep.max_d_resid, row.d_resid);
            rep.max_m_resid = std::max(rep.max_m_resid, row.m_resid);
            rep.rows.push_back(row);
        }
    }
    rep.signs_consistent = d_consistent && m_consistent;
    return rep;
}

RoundTripResult kl_round_trip(const HalfLineFunction& f, const KlQuad& quad,
                              std::size_t s_nodes, std::size_t x_nodes) {
    RoundTripResult out;
    Grid1D sg = numerics::gauss_legendre(s_nodes, quad.smin, quad.smax);
    Grid1D xg = numerics::gauss_legendre(x_nodes, 0.05, 12.0);

    KlResult g = kl_direct(f, sg, quad);
    SampledFunction rt = kl_inverse(g.values, xg, 1.0, quad);

    // best multiple of the round trip against f in L2(dx/x) on the x-grid
    double num = 0.0, den = 0.0, ff = 0.0;
    std::vector<double> fv(xg.size());
    for (std::size_t i = 0; i < xg.size(); ++i) {
        fv[i] = f.value(xg.nodes[i]);
        double w = xg.weights[i] / xg.nodes[i];
        num += w * (rt.values[i].real() * fv[i]);
        den += w * std::norm(rt.values[i]);
        ff += w * fv[i] * fv[i];
    }
    out.calibration = den > 0.0 ? num / den : 0.0;
    double err2 = 0.0;
    for (std::size_t i = 0; i < xg.size(); ++i) {
        double w = xg.weights[i] / xg.nodes[i];
        err2 += w * std::norm(out.calibration * rt.values[i] - fv[i]);
    }
    out.rel_l2_error = std::sqrt(err2 / ff);

    // Parseval constant: ||f||^2_{dx/x} = c' * int w(s) |Kf|^2 ds
    double spec = 0.0;
    for (std::size_t i = 0; i < sg.size(); ++i)
        spec += sg.weights[i] * kl_weight(sg.nodes[i]) * std::norm(g.values.values[i]);
    double full2 = 0.0;
    {
        // ||f||^2 over the truncation box by log quadrature
        Grid1D ax = numerics::composite_gauss(12, 40, std::log(quad.xmin),
                                              std::log(quad.xmax));
        for (std::size_t i = 0; i < ax.size(); ++i) {
            double x = std::exp(ax.nodes[i]);
            full2 += ax.weights[i] * f.value(x) * f.value(x);
        }
    }
    out.parseval_constant = spec > 0.0 ? full2 / spec : 0.0;
    return out;
}

}  // namespace glharm::kl
