#pragma once

#include <complex>

namespace glharm::specfun {

using cplx = std::complex<double>;

// The exponent of a signed power |x|^mu sgn(x)^eps.
struct SignedExponent {
    cplx mu{0.0, 0.0};
    int eps = 0;  // parity, 0 or 1

    SignedExponent() = default;
    SignedExponent(cplx m, int e);
};

// |x|^mu sgn(x)^eps for x != 0.
cplx signed_power(double x, const SignedExponent& e);
cplx signed_power(double x, cplx mu, int eps);

// Principal-branch log Gamma, Lanczos approximation with reflection for
// Re z < 1/2. Good to ~13 digits on |z| <= 50 away from the poles.
cplx log_gamma(cplx z);
cplx gamma_fun(cplx z);

// 1/|Gamma(i s)|^2 for s > 0, computed through log_gamma.
double kl_weight(double s);

struct BesselK {
    double value = 0.0;
    double dx = 0.0;
    double dxx = 0.0;
};

// K_{i tau}(x) for real tau >= 0, x > 0, with first and second x-derivatives.
// Evaluated from the Laplace-type integral over a truncated cosh range when
// that is well conditioned, and from the ascending series (via the complex
// Gamma function) when x < tau with tau >= 1, where the integral would lose
// significance. Relative accuracy ~1e-10 on x in [0.05, 30], tau in [0, 20].
BesselK macdonald_bessel_full(double tau, double x);
double macdonald_bessel(double tau, double x);

// K_{i tau}(x) for complex tau (|Im tau| modest), always from the cosh
// integral; used for imaginary-shift evaluations along horizontal lines.
cplx macdonald_bessel_complex(cplx tau, double x);

// Conservative bound on the truncation tail of the cosh integral.
double macdonald_tail_bound(double x);

// Principal-series Plancherel density in (tau1, tau2) at parity eps1-eps2:
//   parity 0: (tau1-tau2) tanh(pi (tau1-tau2)/2) / (16 pi^3)
//   parity 1: (tau1-tau2) coth(pi (tau1-tau2)/2) / (16 pi^3)
// with the removable singularity at tau1 = tau2 filled by the limit 2/pi.
double plancherel_density(double tau1, double tau2, int parity);

// Discrete-series density n/(8 pi^3), n >= 1.
double discrete_density(int n);

}  // namespace glharm::specfun
