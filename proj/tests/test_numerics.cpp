#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "glharm/numerics.hpp"

using namespace glharm::numerics;
using std::numbers::pi;

TEST_CASE("gauss-legendre two-point rule matches the bisection oracle") {
    auto g = gauss_legendre(2, -1.0, 1.0);
    // positive root of P2 = (3x^2-1)/2 by bisection
    double lo = 0.3, hi = 0.9;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        ((3.0 * mid * mid - 1.0) > 0 ? hi : lo) = mid;
    }
    double root = 0.5 * (lo + hi);
    CHECK(g.nodes[1] == doctest::Approx(root).epsilon(1e-13));
    CHECK(g.nodes[0] == doctest::Approx(-root).epsilon(1e-13));
    CHECK(g.weights[0] == doctest::Approx(1.0));
    CHECK(g.weights[1] == doctest::Approx(1.0));
}

TEST_CASE("gauss-legendre weights sum to the interval length") {
    for (std::size_t n : {2u, 5u, 17u, 64u}) {
        auto g = gauss_legendre(n, -2.0, 5.0);
        double s = 0.0;
        for (double w : g.weights) s += w;
        CHECK(s == doctest::Approx(7.0).epsilon(1e-14));
    }
}

TEST_CASE("gauss-legendre is exact for polynomials of degree 2n-1") {
    auto g = gauss_legendre(8, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += g.weights[i] * std::pow(g.nodes[i], 7);
    CHECK(s == doctest::Approx(1.0 / 8.0).epsilon(1e-13));
    // degree 15 = 2n-1
    s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += g.weights[i] * std::pow(g.nodes[i], 15);
    CHECK(s == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("gauss-legendre rejects bad input") {
    CHECK_THROWS_AS(gauss_legendre(1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_legendre(4, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("integrate: constants, odd symmetry, gaussian") {
    auto gx = gauss_legendre(12, 0.0, 2.0);
    auto gy = gauss_legendre(12, 0.0, 3.0);
    auto f = sample2d(gx, gy, [](double, double) { return cplx(1.0); });
    CHECK(integrate(f).real() == doctest::Approx(6.0).epsilon(1e-14));

    auto gs = gauss_legendre(24, -1.0, 1.0);
    auto odd = sample1d(gs, [](double x) { return cplx(x * x * x); });
    CHECK(std::abs(integrate(odd)) < 1e-15);

    auto gg = gauss_legendre(64, -8.0, 8.0);
    auto gauss = sample1d(gg, [](double x) { return cplx(std::exp(-x * x)); });
    CHECK(integrate(gauss).real() == doctest::Approx(std::sqrt(pi)).epsilon(1e-12));
}

TEST_CASE("central_diff: polynomial exactness, Richardson ratio, constants") {
    auto g = uniform_grid(33, -1.0, 1.0);
    auto f = sample1d(g, [](double t) { return cplx(t * t); });
    auto d = central_diff(f, 0);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(d.deriv.values[i].real() - 2.0 * g.nodes[i]) < 1e-12);

    auto c = sample1d(g, [](double) { return cplx(3.5); });
    auto dc = central_diff(c, 0);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(dc.deriv.values[i]) < 1e-13);

    // halving h cuts the interior error by >= 8 (4th order: ~16)
    auto err_for = [&](std::size_t n) {
        auto gr = uniform_grid(n, 0.0, 3.0);
        auto fr = sample1d(gr, [](double t) { return cplx(std::sin(t)); });
        auto dr = central_diff(fr, 0);
        double e = 0.0;
        for (std::size_t i = 2; i + 2 < gr.size(); ++i)
            e = std::max(e,
                         std::abs(dr.deriv.values[i].real() - std::cos(gr.nodes[i])));
        return e;
    };
    double e1 = err_for(41), e2 = err_for(81);
    CHECK(e1 / e2 >= 8.0);

    CHECK_THROWS_AS(central_diff(sample1d(gauss_legendre(9, 0, 1),
                                          [](double x) { return cplx(x); }),
                                 0),
                    std::invalid_argument);
}

TEST_CASE("central_diff works along both axes of a 2D sample") {
    auto g0 = uniform_grid(17, 0.0, 1.0);
    auto g1 = uniform_grid(21, -1.0, 1.0);
    auto f = sample2d(g0, g1,
                      [](double x, double y) { return cplx(x * x + 3.0 * y); });
    auto d0 = central_diff(f, 0);
    auto d1 = central_diff(f, 1);
    for (std::size_t i = 0; i < g0.size(); ++i)
        for (std::size_t j = 0; j < g1.size(); ++j) {
            CHECK(std::abs(d0.deriv.at(i, j).real() - 2.0 * g0.nodes[i]) < 1e-11);
            CHECK(std::abs(d1.deriv.at(i, j).real() - 3.0) < 1e-11);
        }
}

TEST_CASE("QuadSpec validation and refinement") {
    QuadSpec q;
    q.counts = {8, 8};
    q.box = {{0.0, 1.0}, {-1.0, 2.0}};
    q.validate();
    auto r = q.refined();
    CHECK(r.counts[0] == 12);
    auto e = q.enlarged();
    CHECK(e.box[0].first == doctest::Approx(-0.125));
    CHECK(e.box[0].second == doctest::Approx(1.125));

    QuadSpec bad = q;
    bad.counts[0] = 3;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("tan-compactified grid integrates a full-line rational exactly enough") {
    auto g = tan_compactified(64);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += g.weights[i] / (1.0 + g.nodes[i] * g.nodes[i]);
    CHECK(s == doctest::Approx(pi).epsilon(1e-12));
}

TEST_CASE("barycentric interpolation reproduces smooth samples") {
    auto g = gauss_legendre(24, -1.0, 1.0);
    auto f = sample1d(g, [](double x) { return cplx(std::exp(x) * std::cos(2 * x)); });
    auto bw = barycentric_weights(g.nodes);
    for (double x : {-0.83, -0.21, 0.04, 0.66, 0.93}) {
        cplx v = barycentric_eval(g.nodes, bw, f.values, x);
        CHECK(std::abs(v - cplx(std::exp(x) * std::cos(2 * x))) < 1e-10);
    }
}

TEST_CASE("jacobi eigenvalues of a known matrix") {
    // [[2,1],[1,2]] -> 1, 3
    std::vector<double> m = {2.0, 1.0, 1.0, 2.0};
    auto ev = jacobi_eigenvalues(m, 2);
    CHECK(ev[0] == doctest::Approx(1.0));
    CHECK(ev[1] == doctest::Approx(3.0));
}

TEST_CASE("grid validation catches malformed rules") {
    Grid1D g;
    g.nodes = {0.0, 1.0, 1.0};
    g.weights = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.nodes = {0.0, 0.5, 1.0};
    g.weights = {1.0, -1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
