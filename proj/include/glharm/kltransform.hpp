#pragma once

#include <string>
#include <vector>

#include "glharm/numerics.hpp"

namespace glharm::kl {

using numerics::cplx;
using numerics::Grid1D;
using numerics::SampledFunction;

// Closed-form function holomorphic on the strip |Im s| <= 1 + delta, with a
// measured decay certificate |F(s)| <= C exp(-pi |Re s|) |Re s|^{-3/2-eps}.
class StripFunction {
  public:
    enum class Kind { gauss_cos, kbessel };

    static StripFunction gauss_cos(double alpha, double beta, double eps = 0.1);
    static StripFunction kbessel(double x0, double eps = 0.1);

    cplx value(cplx s) const;
    double decay_C() const { return C_; }
    double decay_eps() const { return eps_; }
    const std::string& descriptor() const { return desc_; }

  private:
    StripFunction() = default;
    Kind kind_ = Kind::gauss_cos;
    double p0_ = 1.0, p1_ = 0.0;
    double C_ = 0.0, eps_ = 0.1;
    std::string desc_;
    void certify();
};

// x^gamma exp(-alpha x - beta / x), scaled; exact derivatives.
class HalfLineFunction {
  public:
    HalfLineFunction(double gamma, double alpha, double beta, double scale = 1.0);
    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
    const std::string& descriptor() const { return desc_; }

  private:
    double gamma_, alpha_, beta_, scale_;
    std::string desc_;
};

struct KlQuad {
    double xmin = 1e-3, xmax = 40.0;
    double smin = 1e-3, smax = 25.0;
    double nodes_per_unit = 14.0;  // log-axis panel density scale
};

struct KlResult {
    SampledFunction values;
    double tail_low = 0.0;   // estimated mass below the truncation
    double tail_high = 0.0;  // and above
    bool tail_warning = false;
};

// Kf(s) = int_0^inf K_{is}(x) f(x) dx/x on the s-grid, truncated to
// [xmin, xmax] with both tails estimated by box comparison.
KlResult kl_direct(const HalfLineFunction& f, const Grid1D& sgrid,
                   const KlQuad& quad = {});

// f(x) = calibration * int kl_weight(s) K_{is}(x) g(s) ds on the x-grid.
SampledFunction kl_inverse(const SampledFunction& g, const Grid1D& xgrid,
                           double calibration, const KlQuad& quad = {});

// (x d/dx)^2 - x^2 applied through exact derivatives.
double apply_D(const HalfLineFunction& f, double x);
// same operator on K_{i tau} via the integral/series derivatives
double apply_D_bessel(double tau, double x);

// Mf(s) = (1/(is)) (F(s+i) - F(s-i)).
cplx apply_M(const StripFunction& f, double s);

struct BispectralRow {
    double x = 0.0, tau = 0.0;
    double d_resid = 0.0;  // |D K + tau^2 K| / max|K|
    double m_resid = 0.0;  // |M K - sign (2/x) K| / max|K|
    int d_sign = 0, m_sign = 0;
};

struct BispectralReport {
    std::vector<BispectralRow> rows;
    int d_sign = 0;  // measured eigenvalue sign of D against tau^2
    int m_sign = 0;  // measured multiplier sign against 2/x
    bool signs_consistent = false;
    double max_d_resid = 0.0, max_m_resid = 0.0;
};

BispectralReport bispectral_report(const std::vector<double>& taus,
                                   const std::vector<double>& xs);

struct RoundTripResult {
    double calibration = 0.0;   // measured constant
    double rel_l2_error = 0.0;  // after calibration
    double parseval_constant = 0.0;
};

// Measures the calibration constant of kl_inverse(kl_direct(f)) ~ f and the
// Parseval constant int |f|^2 dx/x = c' int w |Kf|^2 ds.
RoundTripResult kl_round_trip(const HalfLineFunction& f, const KlQuad& quad = {},
                              std::size_t s_nodes = 420, std::size_t x_nodes = 180);

}  // namespace glharm::kl
