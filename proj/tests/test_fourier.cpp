#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "glharm/fourier.hpp"

using namespace glharm;
using namespace glharm::fourier;
using numerics::cplx;
using numerics::Grid1D;
using std::numbers::pi;

namespace {
gl2::TestFunction box_f() {
    return gl2::bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45});
}
FiberQuad quad16() {
    FiberQuad q;
    q.na = q.nc = q.nd = 16;
    return q;
}
}  // namespace

TEST_CASE("principal_action: identity and diagonal scalars") {
    Grid1D g = numerics::gauss_legendre(24, -1.0, 1.0);
    auto phi = numerics::sample1d(g, [](double t) { return cplx(std::exp(-t * t), t); });
    PrincipalSeriesPoint p{cplx(0.2, 0.3), 1, cplx(-0.4, 0.1), 0};

    auto same = principal_action(p, gl2::GroupElement::identity(), phi);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(same.values[i] - phi.values[i]) < 1e-12);

    double lam = 1.7;
    auto scaled = principal_action(p, gl2::GroupElement::diagonal(lam, lam), phi);
    cplx factor = specfun::signed_power(
                      lam, specfun::SignedExponent(-1.0 + p.mu1 - p.mu2,
                                                   p.eps1 - p.eps2)) *
                  specfun::signed_power(lam * lam,
                                        specfun::SignedExponent(0.5 + p.mu2, p.eps2));
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(scaled.values[i] - factor * phi.values[i]) < 1e-12);
}

TEST_CASE("principal_action is unitary on the unitary axis") {
    Grid1D g = numerics::gauss_legendre(48, -1.0, 1.0);
    // compactly supported bump inside the grid so moved nodes stay inside
    auto phi = numerics::sample1d(g, [](double t) {
        double u = t / 0.45;
        return cplx(u * u < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0);
    });
    auto p = PrincipalSeriesPoint::unitary(0.7, 1, -0.4, 0);
    gl2::GroupElement g1{1.05, 0.04, -0.03, 0.97};
    auto moved = principal_action(p, g1, phi);
    CHECK(std::abs(numerics::l2_norm(moved) / numerics::l2_norm(phi) - 1.0) < 1e-6);
}

TEST_CASE("principal_action reports poles by node") {
    Grid1D g = numerics::gauss_legendre(8, -1.0, 1.0);
    auto phi = numerics::sample1d(g, [](double) { return cplx(1.0); });
    PrincipalSeriesPoint p;
    // a + t c = 0 at t = g.nodes[3]
    gl2::GroupElement bad{-g.nodes[3], 0.3, 1.0, 0.7};
    CHECK_THROWS_AS(principal_action(p, bad, phi), std::domain_error);
}

TEST_CASE("kernel_transform is linear in F") {
    Grid1D tg = numerics::gauss_legendre(10, -1.0, 1.0);
    auto f = box_f();
    auto p = PrincipalSeriesPoint::unitary(0.5, 0, -0.3, 1);
    auto k1 = kernel_transform(f, p, tg, tg, quad16());
    auto f2 = gl2::bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45},
                            {0, 0, 0, 0}, 2.5);
    auto k2 = kernel_transform(f2, p, tg, tg, quad16());
    for (std::size_t i = 0; i < k1.values.size(); ++i)
        CHECK(std::abs(k2.values[i] - 2.5 * k1.values[i]) <
              1e-12 * (std::abs(k1.values[i]) + 1e-12));
}

TEST_CASE("kernel rows applied to a bump match the direct 4D action") {
    Grid1D tg = numerics::gauss_legendre(20, -1.0, 1.0);
    auto f = box_f();
    auto p = PrincipalSeriesPoint::unitary(0.6, 0, -0.4, 1);
    FiberQuad q22;
    q22.na = q22.nc = q22.nd = 22;
    auto K = kernel_transform(f, p, tg, tg, q22);
    auto phi = [](double s) {
        double u = s / 0.8;
        return u * u < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
    };
    numerics::QuadSpec gq = gl2::support_quad(f, 22);
    std::vector<cplx> lhss, rhss;
    for (std::size_t it : {3ul, 10ul, 16ul}) {
        double t = tg.nodes[it];
        cplx lhs = 0.0;
        for (std::size_t j = 0; j < tg.size(); ++j)
            lhs += tg.weights[j] * K.at(it, j) * phi(tg.nodes[j]);
        cplx rhs = gl2::integrate_group(
            [&](const gl2::GroupElement& g) -> cplx {
                double fv = f.value(g);
                if (fv == 0.0) return 0.0;
                double den = g.a + t * g.c;
                cplx coc =
                    specfun::signed_power(den, specfun::SignedExponent(
                                                   -1.0 + p.mu1 - p.mu2,
                                                   p.eps1 - p.eps2)) *
                    specfun::signed_power(
                        g.det(), specfun::SignedExponent(0.5 + p.mu2, p.eps2));
                return fv * phi((g.b + t * g.d) / den) * coc * gl2::haar_weight(g);
            },
            gq);
        lhss.push_back(lhs);
        rhss.push_back(rhs);
    }
    double scale = 0.0;
    for (auto& v : rhss) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < lhss.size(); ++i)
        CHECK(std::abs(lhss[i] - rhss[i]) < 1e-6 * scale);
}

TEST_CASE("hs_inner: positivity, conjugate symmetry, Cauchy-Schwarz") {
    Grid1D tg = numerics::gauss_legendre(12, -1.0, 1.0);
    auto f1 = box_f();
    auto f2 = gl2::bump_box({1.45, 0.1, -0.05, 1.55}, {0.4, 0.35, 0.4, 0.42});
    auto p = PrincipalSeriesPoint::unitary(0.8, 1, -0.2, 0);
    auto k1 = kernel_transform(f1, p, tg, tg, quad16());
    auto k2 = kernel_transform(f2, p, tg, tg, quad16());

    cplx n1 = hs_inner(k1, k1);
    CHECK(n1.real() > 0.0);
    CHECK(std::abs(n1.imag()) < 1e-12 * n1.real());
    cplx a = hs_inner(k1, k2), b = hs_inner(k2, k1);
    CHECK(std::abs(a - std::conj(b)) < 1e-12 * std::abs(a));
    CHECK(std::norm(a) <= hs_inner(k1, k1).real() * hs_inner(k2, k2).real() *
                              (1.0 + 1e-12));
}

TEST_CASE("group_l2_inner basics") {
    auto f1 = box_f();
    auto f2 = gl2::bump_box({1.45, 0.1, -0.05, 1.55}, {0.4, 0.35, 0.4, 0.42});
    numerics::QuadSpec q = gl2::support_quad2(f1, f2, 16);
    CHECK(group_l2_inner(f1, f1, q).real() > 0.0);
    // scaled copy
    auto f3 = gl2::bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45},
                            {0, 0, 0, 0}, 3.0);
    CHECK(group_l2_inner(f3, f1, q).real() ==
          doctest::Approx(3.0 * group_l2_inner(f1, f1, q).real()));
    // disjoint supports
    auto g1 = gl2::bump_box({1.2, 0.0, 0.0, 1.2}, {0.1, 0.1, 0.1, 0.1});
    auto g2 = gl2::bump_box({1.8, 0.0, 0.0, 1.8}, {0.1, 0.1, 0.1, 0.1});
    numerics::QuadSpec qd = gl2::support_quad2(g1, g2, 12);
    CHECK(std::abs(group_l2_inner(g1, g2, qd)) < 1e-30);
}

TEST_CASE("tensor and interval fiber strategies agree") {
    Grid1D tg = numerics::gauss_legendre(7, -0.8, 0.8);
    auto f = box_f();
    PrincipalSeriesPoint p{cplx(0.3, 0.5), 0, cplx(-0.2, -0.4), 1};
    auto a = kernel_transform(f, p, tg, tg, quad16(), KernelDeriv::value, 0,
                              FiberStrategy::tensor);
    auto b = kernel_transform(f, p, tg, tg, quad16(), KernelDeriv::value, 0,
                              FiberStrategy::intervals);
    double scale = 0.0;
    for (auto& v : a.values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(std::abs(a.values[i] - b.values[i]) < 1e-4 * scale);
    // agreement sharpens when both rules refine
    FiberQuad q24;
    q24.na = q24.nc = q24.nd = 24;
    q24.nodes_per_unit = 14.0;
    auto a2 = kernel_transform(f, p, tg, tg, q24, KernelDeriv::value, 0,
                               FiberStrategy::tensor);
    auto b2 = kernel_transform(f, p, tg, tg, q24, KernelDeriv::value, 0,
                               FiberStrategy::intervals);
    double dev1 = 0.0, dev2 = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dev1 = std::max(dev1, std::abs(a.values[i] - b.values[i]));
        dev2 = std::max(dev2, std::abs(a2.values[i] - b2.values[i]));
    }
    CHECK(dev2 < dev1);
}

TEST_CASE("kernel is smooth: second differences stay bounded under refinement") {
    auto f = box_f();
    auto p = PrincipalSeriesPoint::unitary(1.3, 0, -0.9, 0);
    auto probe = [&](std::size_t n) {
        Grid1D u = numerics::uniform_grid(n, -0.9, 0.9);
        FiberQuad q24;
        q24.na = q24.nc = q24.nd = 24;
        auto K = kernel_transform(f, p, u, u, q24);
        numerics::SampledFunction s;
        s.grids = {u, u};
        s.values = K.values;
        auto d1 = numerics::central_diff(s, 0);
        auto d2 = numerics::central_diff(d1.deriv, 0);
        double m = 0.0;
        for (auto& v : d2.deriv.values) m = std::max(m, std::abs(v));
        return m;
    };
    double c1 = probe(17), c2 = probe(33);
    CHECK(c2 < 1.5 * c1 + 1e-9);
}

TEST_CASE("ds_matrix: identity and central elements") {
    DiscreteSeriesPoint d{2, 0.0, 0};
    auto m = ds_matrix(d, gl2::GroupElement::identity(), 6);
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t k = 0; k < 6; ++k) {
            cplx want = (j == k) ? cplx(1.0) : cplx(0.0);
            CHECK(std::abs(m[j * 6 + k] - want) < 1e-8);
        }
    DiscreteSeriesPoint dt{2, 0.7, 0};
    double lam = 1.4;
    auto ms = ds_matrix(dt, gl2::GroupElement::diagonal(lam, lam), 6);
    cplx want = specfun::signed_power(
                    lam * lam,
                    specfun::SignedExponent(0.5 + 0.5 * dt.n + cplx(0, dt.tau),
                                            dt.delta)) *
                std::pow(lam, -1.0 - dt.n);
    for (std::size_t j = 0; j < 6; ++j)
        CHECK(std::abs(ms[j * 6 + j] - want) < 1e-8);
    CHECK(std::abs(std::abs(want) - 1.0) < 1e-12);  // unitary scalar
}

TEST_CASE("ds_matrix: truncated rotations tend to unitarity as N grows") {
    DiscreteSeriesPoint d{1, 0.3, 1};
    gl2::GroupElement r = gl2::GroupElement::rotation(0.6);
    auto defect = [&](std::size_t N) {
        auto m = ds_matrix(d, r, N);
        double worst = 0.0;
        // ||M* M - I||_max over the leading (N-2) block to dodge edge effects
        for (std::size_t i = 0; i + 2 < N; ++i)
            for (std::size_t j = 0; j + 2 < N; ++j) {
                cplx s = 0.0;
                for (std::size_t k = 0; k < N; ++k)
                    s += std::conj(m[k * N + i]) * m[k * N + j];
                cplx want = (i == j) ? cplx(1.0) : cplx(0.0);
                worst = std::max(worst, std::abs(s - want));
            }
        return worst;
    };
    double d6 = defect(6), d12 = defect(12);
    CHECK(d12 < d6);
    CHECK(d12 < 1e-2);
}

TEST_CASE("ds_action applies the matrix and ds_trace is nonnegative") {
    DiscreteSeriesPoint d{1, 0.2, 0};
    gl2::GroupElement g{1.1, 0.1, -0.05, 1.05};
    std::vector<cplx> c = {cplx(1.0), cplx(0.0, 0.5), cplx(-0.3), cplx(0.2)};
    auto out = ds_action(d, g, c, 4);
    auto m = ds_matrix(d, g, 4);
    for (std::size_t j = 0; j < 4; ++j) {
        cplx want = 0.0;
        for (std::size_t k = 0; k < 4; ++k) want += m[j * 4 + k] * c[k];
        CHECK(std::abs(out[j] - want) < 1e-14);
    }
    auto f = box_f();
    double tr = ds_trace(f, d, 4, 6);
    CHECK(tr >= 0.0);
}

TEST_CASE("kernel serialization round trip and cache keys") {
    Grid1D tg = numerics::gauss_legendre(6, -1.0, 1.0);
    auto f = box_f();
    auto p = PrincipalSeriesPoint::unitary(0.4, 1, -0.6, 0);
    FiberQuad q;
    q.na = q.nc = q.nd = 8;
    auto k = kernel_transform(f, p, tg, tg, q);
    std::ostringstream os;
    write_kernel(os, k);
    std::istringstream is(os.str());
    auto k2 = read_kernel(is);
    CHECK(k2.point.eps1 == k.point.eps1);
    CHECK(k2.tgrid.nodes == k.tgrid.nodes);
    for (std::size_t i = 0; i < k.values.size(); ++i)
        CHECK(std::abs(k.values[i] - k2.values[i]) < 1e-16 * std::abs(k.values[i]) + 0.0);
    // stable, distinct keys
    auto key1 = kernel_cache_key(f.descriptor(), p, tg, tg, q.str());
    auto key2 = kernel_cache_key(f.descriptor(), p, tg, tg, q.str());
    CHECK(key1 == key2);
    auto p2 = p;
    p2.eps2 = 1;
    CHECK(kernel_cache_key(f.descriptor(), p2, tg, tg, q.str()) != key1);
}

TEST_CASE("invariant column norm agrees across column anchors") {
    auto f = gl2::invariant_bump(1.5, 0.8, 0.55, 0.7);
    auto p = PrincipalSeriesPoint::unitary(0.9, 0, -0.7, 0);
    double h0 = invariant_hs_norm_sq(f, p, 72, 16, 8.0, 0.0);
    double h1 = invariant_hs_norm_sq(f, p, 72, 16, 8.0, 0.45);
    CHECK(h0 > 0.0);
    CHECK(std::abs(h1 / h0 - 1.0) < 2e-3);
}

TEST_CASE("invariant column norm matches the interval-strategy kernel column") {
    auto f = gl2::invariant_bump(1.5, 0.8, 0.55, 0.7);
    auto p = PrincipalSeriesPoint::unitary(0.9, 0, -0.7, 0);
    Grid1D tg = numerics::tan_compactified(72);
    Grid1D sg;
    sg.nodes = {-1e-5, 1e-5};
    sg.weights = {1.0, 1.0};
    FiberQuad q;
    q.na = q.nc = q.nd = 16;
    q.nodes_per_unit = 10.0;
    auto K = kernel_transform(f, p, tg, sg, q, KernelDeriv::value, 0,
                              FiberStrategy::intervals);
    double total = 0.0;
    for (std::size_t i = 0; i < tg.size(); ++i) {
        cplx mid = 0.5 * (K.at(i, 0) + K.at(i, 1));
        total += tg.weights[i] * std::norm(mid);
    }
    total *= pi;
    double h0 = invariant_hs_norm_sq(f, p, 72, 16, 8.0, 0.0);
    CHECK(std::abs(total / h0 - 1.0) < 2e-3);
}
