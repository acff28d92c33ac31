#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "glharm/gl2.hpp"

using namespace glharm;
using namespace glharm::gl2;
using numerics::cplx;

namespace {
GroupElement probe() { return {1.4, 0.2, -0.1, 1.6}; }

double fd_partial(const TestFunction& f, const GroupElement& g, int which, double h) {
    auto shift = [&](double e) {
        GroupElement s = g;
        (which == 0 ? s.a : which == 1 ? s.b : which == 2 ? s.c : s.d) += e;
        return s;
    };
    return (f.value(shift(-2 * h)) - 8 * f.value(shift(-h)) + 8 * f.value(shift(h)) -
            f.value(shift(2 * h))) /
           (12 * h);
}
}  // namespace

TEST_CASE("haar_weight basics") {
    CHECK(haar_weight(GroupElement::identity()) == doctest::Approx(1.0));
    CHECK(haar_weight(GroupElement::diagonal(2.0, 1.0)) == doctest::Approx(0.25));
    CHECK_THROWS_AS(haar_weight(GroupElement{1, 2, 2, 4}), std::domain_error);
}

TEST_CASE("mobius_act: identity, affine row, cocycle") {
    for (double t : {-1.2, 0.0, 0.7})
        CHECK(mobius_act(GroupElement::identity(), t) == doctest::Approx(t));
    GroupElement shear{1, 1, 0, 1};
    CHECK(mobius_act(shear, 0.4) == doctest::Approx(1.4));
    GroupElement g1{1.1, 0.3, -0.2, 0.9}, g2{0.8, -0.1, 0.15, 1.2};
    double t = 0.37;
    CHECK(mobius_act(g2, mobius_act(g1, t)) ==
          doctest::Approx(mobius_act(g1 * g2, t)).epsilon(1e-12));
}

TEST_CASE("haar weight makes translates integrate identically") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45});
    GroupElement h{1.1, 0.08, -0.05, 0.95};
    auto base = [&](const GroupElement& g) -> cplx {
        double v = f.value(g);
        return v == 0.0 ? cplx(0.0) : cplx(v * haar_weight(g));
    };
    // each integral over a box hugging its own (translated) support
    numerics::QuadSpec q = support_quad(f, 34);
    cplx plain = integrate_group(base, q);
    numerics::QuadSpec ql = q;
    for (auto& n : ql.counts) n = 34;
    ql.box = {{0.91, 1.81}, {-0.56, 0.33}, {-0.43, 0.57}, {1.07, 2.07}};
    cplx left = integrate_group(
        [&](const GroupElement& g) -> cplx {
            GroupElement hg = h * g;
            double v = f.value(hg);
            return v == 0.0 ? cplx(0.0) : cplx(v * haar_weight(g));
        },
        ql);
    numerics::QuadSpec qr = q;
    for (auto& n : qr.counts) n = 34;
    qr.box = {{0.92, 1.79}, {-0.63, 0.40}, {-0.36, 0.51}, {1.06, 2.08}};
    cplx right = integrate_group(
        [&](const GroupElement& g) -> cplx {
            GroupElement gh = g * h;
            double v = f.value(gh);
            return v == 0.0 ? cplx(0.0) : cplx(v * haar_weight(g));
        },
        qr);
    CHECK(std::abs(left.real() / plain.real() - 1.0) < 1e-6);
    CHECK(std::abs(right.real() / plain.real() - 1.0) < 1e-6);
}

TEST_CASE("bump_box exact partials match finite differences") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45}, {0, 1, 0, 0},
                      1.5);
    GroupElement g = probe();
    auto gr = f.grad(g);
    const double vals[4] = {gr.da, gr.db, gr.dc, gr.dd};
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(vals[i] - fd_partial(f, g, i, 1e-4)) < 1e-8);
}

TEST_CASE("invariant_bump is exactly rotation-bi-invariant with exact partials") {
    auto f = invariant_bump(1.5, 0.8, 0.55, 0.7);
    CHECK(invariance_residual(f) < 1e-14);
    GroupElement g{1.2, 0.4, -0.3, 1.3};
    CHECK(f.value(g) > 0.0);
    auto gr = f.grad(g);
    const double vals[4] = {gr.da, gr.db, gr.dc, gr.dd};
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(vals[i] - fd_partial(f, g, i, 1e-4)) < 1e-8);
    CHECK(f.det_sign() == 1);
    CHECK(f.det_margin() > 0.0);
}

TEST_CASE("rotation_average reaches the invariance gate") {
    // a monomial modulation has band-limited angular dependence, so the
    // discrete rotation average converges to the exact orbit average
    auto base = monomial_modulated(invariant_bump(1.5, 0.8, 0.55, 0.7),
                                   {2, 0, 0, 0}, 1.0);
    CHECK(invariance_residual(base) > 1e-3);  // genuinely non-invariant input
    auto avg = rotation_average(base, 32, 1e-10);
    CHECK(invariance_residual(avg) < 1e-10);
    // the average is nonzero somewhere (even modulation survives)
    auto avg2 = rotation_average(
        monomial_modulated(invariant_bump(1.5, 0.8, 0.55, 0.7), {2, 0, 0, 0}, 1.0),
        32, 1e-10);
    bool nonzero = false;
    for (double a : {1.1, 1.4, 1.7})
        nonzero |= std::abs(avg2.value(GroupElement{a, 0.2, -0.1, a})) > 1e-8;
    CHECK(nonzero);
}

TEST_CASE("apply_generator: e12 vanishes where the a- and b-partials vanish") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45});
    // at the bump centers in a and b both partials are exactly zero
    GroupElement g{1.5, 0.0, -0.2, 1.7};
    CHECK(f.grad(g).da == 0.0);
    CHECK(f.grad(g).db == 0.0);
    auto ef = apply_generator(GeneratorId::e12, f);
    CHECK(ef.value(g) == 0.0);
}

TEST_CASE("apply_generator: e14 at points with c = 0 is the b-partial") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45});
    GroupElement g{1.4, 0.2, 0.0, 1.6};
    auto ef = apply_generator(GeneratorId::e14, f);
    CHECK(ef.value(g) == doctest::Approx(f.grad(g).db).epsilon(1e-12));
}

TEST_CASE("apply_generator: e32 matches the displayed expression pointwise") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45}, {1, 0, 0, 1});
    GroupElement g = probe();
    auto ef = apply_generator(GeneratorId::e32, f);
    auto gr = f.grad(g);
    double direct = -(g.a * g.c * gr.da + g.a * g.d * gr.db + g.c * g.c * gr.dc +
                      g.c * g.d * gr.dd) -
                    g.c * f.value(g);
    CHECK(ef.value(g) == doctest::Approx(direct).epsilon(1e-12));
    // and against a 4D finite-difference evaluation of the partials
    double fd = -(g.a * g.c * fd_partial(f, g, 0, 1e-4) +
                  g.a * g.d * fd_partial(f, g, 1, 1e-4) +
                  g.c * g.c * fd_partial(f, g, 2, 1e-4) +
                  g.c * g.d * fd_partial(f, g, 3, 1e-4)) -
                g.c * f.value(g);
    CHECK(ef.value(g) == doctest::Approx(fd).epsilon(1e-9));
}

TEST_CASE("generator outputs carry exact partials (vs finite differences)") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45});
    for (auto id : {GeneratorId::e12, GeneratorId::e43, GeneratorId::e14,
                    GeneratorId::e32, GeneratorId::mult_c, GeneratorId::mult_det_inv,
                    GeneratorId::d_db}) {
        auto ef = apply_generator(id, f);
        REQUIRE(ef.has_grad());
        GroupElement g = probe();
        auto gr = ef.grad(g);
        const double vals[4] = {gr.da, gr.db, gr.dc, gr.dd};
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(vals[i] - fd_partial(ef, g, i, 1e-4)) < 1e-8);
    }
}

TEST_CASE("commutator spot-check through second partials") {
    auto f = bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45});
    auto a = apply_generator(GeneratorId::e12, apply_generator(GeneratorId::e43, f));
    auto b = apply_generator(GeneratorId::e43, apply_generator(GeneratorId::e12, f));
    // the two fields are a left and a right translation generator, so the
    // vector-field commutator vanishes identically
    GroupElement g = probe();
    double scale = std::abs(a.value(g)) + std::abs(b.value(g)) + 1.0;
    CHECK(std::abs(a.value(g) - b.value(g)) < 1e-9 * scale);

    // a non-commuting pair: [e43, e14] = -da + (d/det) as a direct calculus
    // identity; check the composition difference against it
    auto c1 = apply_generator(GeneratorId::e43, apply_generator(GeneratorId::e14, f));
    auto c2 = apply_generator(GeneratorId::e14, apply_generator(GeneratorId::e43, f));
    double comm = c1.value(g) - c2.value(g);
    double direct = -f.grad(g).da + (g.d / g.det()) * f.value(g);
    CHECK(comm == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("convolution: approximate identity, Fubini mass, zero") {
    auto f1 = bump_box({1.5, 0.0, 0.0, 1.5}, {0.42, 0.42, 0.42, 0.42});
    // narrow bump near the identity
    auto f2 = bump_box({1.0, 0.0, 0.0, 1.0}, {0.025, 0.025, 0.025, 0.025});
    // normalize f2 to unit Haar mass with the same rule the convolution uses,
    // so the shared bump-quadrature error divides out
    numerics::QuadSpec q2 = support_quad(f2, 12);
    double mass = integrate_group(
                      [&](const GroupElement& g) -> cplx {
                          double v = f2.value(g);
                          return v == 0.0 ? cplx(0.0) : cplx(v * haar_weight(g));
                      },
                      q2)
                      .real();
    auto conv = convolution_function(f1, f2, 12);
    double worst = 0.0;
    for (const GroupElement& g :
         {GroupElement{1.5, 0.0, 0.0, 1.5}, GroupElement{1.42, 0.06, -0.05, 1.56},
          GroupElement{1.58, -0.08, 0.04, 1.45}}) {
        double approx = conv.value(g) / mass;
        worst = std::max(worst, std::abs(approx / f1.value(g) - 1.0));
    }
    CHECK(worst < 0.02);

    // mass multiplicativity
    numerics::QuadSpec q1 = support_quad(f1, 16);
    double m1 = integrate_group(
                    [&](const GroupElement& g) -> cplx {
                        double v = f1.value(g);
                        return v == 0.0 ? cplx(0.0) : cplx(v * haar_weight(g));
                    },
                    q1)
                    .real();
    numerics::QuadSpec qc = support_quad(conv, 20);
    double mc = integrate_group(
                    [&](const GroupElement& g) -> cplx {
                        double v = conv.value(g);
                        return cplx(v * haar_weight(g));
                    },
                    qc)
                    .real();
    CHECK(mc == doctest::Approx(m1 * mass).epsilon(5e-3));
}

TEST_CASE("convolve produces sampled values on the requested grid") {
    auto f1 = bump_box({1.5, 0.0, 0.0, 1.5}, {0.3, 0.3, 0.3, 0.3});
    auto f2 = bump_box({1.0, 0.0, 0.0, 1.0}, {0.12, 0.12, 0.12, 0.12});
    std::array<numerics::Grid1D, 4> out = {
        numerics::gauss_legendre(4, 1.0, 2.2), numerics::gauss_legendre(4, -0.6, 0.6),
        numerics::gauss_legendre(4, -0.6, 0.6), numerics::gauss_legendre(4, 1.0, 2.2)};
    numerics::QuadSpec inner = support_quad(f1, 10);
    auto s = convolve(f1, f2, out, inner);
    CHECK(s.values.size() == 256);
    bool nonzero = false;
    for (auto& v : s.values) nonzero |= std::abs(v) > 0.0;
    CHECK(nonzero);
}
