#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "glharm/separation.hpp"

using namespace glharm;
using namespace glharm::separation;
using numerics::cplx;
using numerics::Grid1D;
using std::numbers::pi;

TEST_CASE("fft round trip and a known transform") {
    std::vector<cplx> a(16);
    for (std::size_t i = 0; i < 16; ++i) a[i] = cplx(std::cos(0.3 * i), 0.1 * i);
    auto b = a;
    fft_inplace(b, false);
    fft_inplace(b, true);
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-13);
    // delta -> flat spectrum
    std::vector<cplx> d(8, cplx(0.0));
    d[0] = 1.0;
    fft_inplace(d, false);
    for (auto& v : d) CHECK(std::abs(v - cplx(1.0)) < 1e-14);
    std::vector<cplx> bad(6);
    CHECK_THROWS_AS(fft_inplace(bad, false), std::invalid_argument);
}

TEST_CASE("hardy projections: sum, idempotence, orthogonality") {
    Grid1D g = numerics::uniform_grid(256, -30.0, 30.0, true);
    auto f = numerics::sample1d(g, [](double x) {
        return cplx(std::exp(-x * x / 14.0) * std::cos(1.9 * x),
                    std::exp(-x * x / 11.0) * std::sin(0.7 * x));
    });
    BandReport br;
    auto fp = hardy_project(f, HardySign::plus, &br);
    auto fm = hardy_project(f, HardySign::minus);
    CHECK(br.ok);
    double sum = 0.0, idem = 0.0, cross = 0.0;
    auto fpp = hardy_project(fp, HardySign::plus);
    auto fpm = hardy_project(fp, HardySign::minus);
    for (std::size_t i = 0; i < g.size(); ++i) {
        sum = std::max(sum, std::abs(fp.values[i] + fm.values[i] - f.values[i]));
        idem = std::max(idem, std::abs(fpp.values[i] - fp.values[i]));
        cross = std::max(cross, std::abs(fpm.values[i]));
    }
    CHECK(sum < 1e-10);
    CHECK(idem < 1e-10);
    CHECK(cross < 1e-10);
}

TEST_CASE("a lower-half-plane pole is a plus function") {
    Grid1D g = numerics::uniform_grid(1024, -60.0, 60.0, true);
    auto f = numerics::sample1d(g, [](double x) {
        cplx z(x, 1.0);
        return 1.0 / (z * z * z);
    });
    auto ft = edge_taper(f, 0.05);
    auto proj = hardy_project(ft, HardySign::plus);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g.nodes[i]) > 36.0) continue;
        num += std::norm(proj.values[i] - ft.values[i]);
        den += std::norm(ft.values[i]);
    }
    CHECK(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("sl2_T_action: identity, unitarity, projective composition") {
    Grid1D g = numerics::uniform_grid(512, -40.0, 40.0, true);
    auto f = numerics::sample1d(g, [](double x) {
        return cplx(std::exp(-x * x / 9.0) * std::cos(1.3 * x));
    });
    auto same = sl2_T_action(gl2::GroupElement::identity(), f);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(same.values[i] - f.values[i]) < 1e-12);

    gl2::GroupElement r = gl2::GroupElement::rotation(0.07);
    gl2::GroupElement d{std::exp(0.05), 0.0, 0.0, std::exp(-0.05)};
    auto tf = sl2_T_action(r * d, f);
    CHECK(std::abs(numerics::l2_norm(tf) / numerics::l2_norm(f) - 1.0) < 1e-5);

    auto two = sl2_T_action(r, sl2_T_action(d, f));
    auto one = sl2_T_action(r * d, f);
    double devp = 0.0, devm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        devp = std::max(devp, std::abs(two.values[i] - one.values[i]));
        devm = std::max(devm, std::abs(two.values[i] + one.values[i]));
    }
    CHECK(std::min(devp, devm) < 1e-5 * numerics::l2_norm(f));
}

TEST_CASE("hyperboloid weight and the J map") {
    CHECK(hyperboloid_weight(2.0, 1.0) == doctest::Approx(1.0));
    CHECK(hyperboloid_weight(0.3, 0.8) == doctest::Approx(hyperboloid_weight(0.8, 0.3)));
    CHECK_THROWS_AS(hyperboloid_weight(0.5, 0.5), std::domain_error);

    Grid1D g0 = numerics::uniform_grid(64, -10.0, 10.0, true);
    Grid1D g1 = numerics::uniform_grid(64, -10.0 + 0.15625, 10.0 + 0.15625, true);
    auto f = numerics::sample2d(g0, g1, [](double x, double y) {
        return cplx(std::exp(-(x * x + y * y) / 8.0), 0.2 * x * y *
                                                          std::exp(-(x * x + y * y) / 9.0));
    });
    auto jf = J_map(f);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < g0.size(); ++i)
        for (std::size_t j = 0; j < g1.size(); ++j) {
            double w = g0.weights[i] * g1.weights[j];
            a += w * std::norm(jf.at(i, j));
            b += w * std::norm(f.at(i, j)) *
                 hyperboloid_weight(g0.nodes[i], g1.nodes[j]);
        }
    CHECK(std::abs(a / b - 1.0) < 1e-12);
    // J inverse undoes J
    auto back = J_map_inverse(jf);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        CHECK(std::abs(back.values[i] - f.values[i]) < 1e-14);
}

TEST_CASE("Q action: identity, factorization over products, unitarity") {
    Grid1D g0 = numerics::uniform_grid(128, -20.0, 20.0, true);
    Grid1D g1 = numerics::uniform_grid(128, -20.0 + 0.15, 20.0 + 0.15, true);
    auto u = [](double x) { return std::exp(-x * x / 7.0) * std::cos(0.9 * x); };
    auto v = [](double y) { return std::exp(-y * y / 6.0) * std::sin(1.1 * y); };
    auto f = numerics::sample2d(g0, g1,
                                [&](double x, double y) { return cplx(u(x) * v(y)); });
    auto same = Q_action(gl2::GroupElement::identity(), f);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        CHECK(std::abs(same.values[i] - f.values[i]) < 1e-12);

    gl2::GroupElement g{std::exp(0.04), 0.05, -0.03,
                        (1.0 + 0.05 * 0.03) / std::exp(0.04)};
    auto qf = Q_action(g, f);
    auto tu = sl2_T_action(g, numerics::sample1d(g0, [&](double x) { return cplx(u(x)); }));
    auto tv = sl2_T_action(g, numerics::sample1d(g1, [&](double y) { return cplx(v(y)); }));
    double dev = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g0.size(); ++i)
        for (std::size_t j = 0; j < g1.size(); ++j) {
            dev = std::max(dev, std::abs(qf.at(i, j) - tu.values[i] * tv.values[j]));
            scale = std::max(scale, std::abs(qf.at(i, j)));
        }
    CHECK(dev < 1e-8 * scale);

    double nq = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < g0.size(); ++i)
        for (std::size_t j = 0; j < g1.size(); ++j) {
            double w = g0.weights[i] * g1.weights[j];
            nq += w * std::norm(qf.at(i, j));
            nf += w * std::norm(f.at(i, j));
        }
    CHECK(std::abs(nq / nf - 1.0) < 1e-5);
}

TEST_CASE("block projections: completeness, orthogonality, Q commutator") {
    Grid1D g = numerics::uniform_grid(128, -20.0, 20.0, true);
    auto f = numerics::sample2d(g, g, [](double x, double y) {
        return cplx(std::exp(-(x * x + y * y) / 10.0) * std::cos(1.2 * x + 0.5 * y),
                    std::exp(-(x * x + y * y) / 12.0) * std::sin(0.6 * x - 0.9 * y));
    });
    f = edge_taper(f, 0.05);
    HardyComponent comps[4] = {{HardySign::plus, HardySign::plus},
                               {HardySign::plus, HardySign::minus},
                               {HardySign::minus, HardySign::plus},
                               {HardySign::minus, HardySign::minus}};
    std::vector<numerics::SampledFunction> blocks;
    for (auto c : comps) blocks.push_back(block_project(f, c));
    double sum = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        cplx s = 0.0;
        for (auto& b : blocks) s += b.values[i];
        sum = std::max(sum, std::abs(s - f.values[i]));
    }
    CHECK(sum < 1e-10);
    auto cross = block_project(blocks[0], comps[3]);
    double cmax = 0.0;
    for (auto& v : cross.values) cmax = std::max(cmax, std::abs(v));
    CHECK(cmax < 1e-10);

    gl2::GroupElement gnear = gl2::GroupElement::rotation(0.03);
    auto qp = Q_action(gnear, blocks[0]);
    auto pq = block_project(Q_action(gnear, f), comps[0]);
    double dev2 = 0.0, nf2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            double w = g.weights[i] * g.weights[j];
            dev2 += w * std::norm(qp.at(i, j) - pq.at(i, j));
            nf2 += w * std::norm(f.at(i, j));
        }
    CHECK(std::sqrt(dev2 / nf2) < 1e-4);
}

TEST_CASE("lorentz elements: construction, validation, action on the sphere") {
    auto b = LorentzElement::boost(3, 1, 1.5);
    auto r = LorentzElement::spatial_rotation(3, 1, 2, 0.8);
    auto p = b * r;
    CHECK(p.block_a() > 1.0);
    // invalid matrix rejected
    std::vector<double> junk(16, 0.1);
    CHECK_THROWS_AS(LorentzElement(3, junk), std::invalid_argument);

    Vec3 x{0.36, 0.48, 0.8};
    auto [y, dil] = lorentz_sphere_action(p, x, 3);
    CHECK(std::abs(y[0] * y[0] + y[1] * y[1] + y[2] * y[2] - 1.0) < 1e-12);
    CHECK(dil > 0.0);
    auto [yi, dili] = lorentz_sphere_action(LorentzElement::identity(3), x, 3);
    CHECK(std::abs(yi[0] - x[0]) + std::abs(yi[1] - x[1]) + std::abs(yi[2] - x[2]) <
          1e-15);
    CHECK(dili == doctest::Approx(1.0));
    // dilatation cocycle along a composition
    auto [y1, d1] = lorentz_sphere_action(r, x, 3);
    auto [y2, d2] = lorentz_sphere_action(b, y1, 3);
    auto [yc, dc] = lorentz_sphere_action(b * r, x, 3);
    CHECK(std::abs(d1 * d2 - dc) < 1e-12);
    CHECK(std::abs(y2[0] - yc[0]) + std::abs(y2[1] - yc[1]) + std::abs(y2[2] - yc[2]) <
          1e-12);
}

TEST_CASE("sphere grids: areas and equator avoidance") {
    auto s2 = SphereGrid::make(2, 96);
    CHECK(s2.area() == doctest::Approx(2.0 * pi).epsilon(1e-12));
    auto s3 = SphereGrid::make(3, 24, 48);
    CHECK(s3.area() == doctest::Approx(4.0 * pi).epsilon(1e-12));
    for (const auto& pnt : s3.points) CHECK(pnt[2] != 0.0);
}

TEST_CASE("comp_action: identity and principal unitarity") {
    ComplementaryParams p;
    p.q = 3;
    p.principal = true;
    p.sigma = 0.9;
    p.s = 0.4;
    auto grid = SphereGrid::make(3, 40, 80);
    auto f = sample_sphere(grid, [](const Vec3& x) {
        return cplx(1.0 + 0.3 * x[0] + 0.2 * x[1] - 0.1 * x[2] * x[2]);
    });
    auto same = comp_action(p, LorentzElement::identity(3), f);
    double dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        dev = std::max(dev, std::abs(same.values[i] - f.values[i]));
    CHECK(dev < 1e-9);

    auto g = LorentzElement::boost(3, 2, 0.3);
    auto tf = comp_action(p, g, f);
    double n0 = 0.0, n1 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        n0 += grid.weights[i] * std::norm(f.values[i]);
        n1 += grid.weights[i] * std::norm(tf.values[i]);
    }
    CHECK(std::abs(n1 / n0 - 1.0) < 1e-5);
}

TEST_CASE("comp_gram: rotation-invariant reduction for constants at q = 2") {
    ComplementaryParams p;
    p.q = 2;
    p.s = 0.25;
    p.convention = ComplementaryParams::KernelConvention::verbatim;
    auto one = [](const Vec3&) { return cplx(1.0); };
    cplx v = comp_gram(p, one, one, 1);
    // 1D reduction oracle: 2 pi * int_0^{2 pi} (2 sin(theta/2))^{s - 1/2} dtheta,
    // computed with the substitution theta = u^{2/(1/2+s)} absorbing the
    // endpoint singularity
    double alpha = p.s - 0.5;  // in (-1/2, 0)
    double want = 0.0;
    {
        double power = 1.0 + alpha;  // integrand ~ theta^alpha at 0
        auto gg = numerics::gauss_legendre(4000, 1e-12, std::pow(pi, power));
        // theta = u^{1/power}, dtheta = (1/power) u^{1/power - 1} du, on [0, pi]
        double s1 = 0.0;
        for (std::size_t i = 0; i < gg.size(); ++i) {
            double u = gg.nodes[i];
            double theta = std::pow(u, 1.0 / power);
            double jac = (1.0 / power) * std::pow(u, 1.0 / power - 1.0);
            s1 += gg.weights[i] * std::pow(2.0 * std::sin(0.5 * theta), alpha) * jac;
        }
        want = 2.0 * pi * 2.0 * s1;  // symmetric halves
    }
    CHECK(std::abs(v.real() - want) < 2e-3 * std::abs(want));
}

TEST_CASE("comp_gram positivity on a small family") {
    ComplementaryParams p;
    p.q = 2;
    p.s = 0.3;
    std::vector<std::function<cplx(const Vec3&)>> fns = {
        [](const Vec3&) { return cplx(1.0); },
        [](const Vec3& x) { return cplx(x[0]); },
        [](const Vec3& x) { return cplx(x[1]); },
        [](const Vec3& x) { return cplx(x[0] * x[0] - x[1] * x[1]); }};
    std::vector<double> gram(16);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double v = comp_gram(p, fns[i], fns[j], 0).real();
            gram[i * 4 + j] = gram[j * 4 + i] = v;
        }
    auto ev = numerics::jacobi_eigenvalues(gram, 4);
    CHECK(ev.front() > 0.0);
}

TEST_CASE("equator pairing: q=2 exact sum; q=3 divergence detection") {
    ComplementaryParams p2;
    p2.q = 2;
    p2.s = 0.3;
    auto one = [](const Vec3&) { return cplx(1.0); };
    auto r2 = equator_delta_gram(p2, one, one, 0);
    double e = p2.equator_exponent();
    double want = 2.0 * std::pow(2.0, -e);
    CHECK(r2.value.real() == doctest::Approx(want).epsilon(1e-13));

    auto phi = [](const Vec3& x) { return cplx(1.0 + 0.2 * x[0]); };
    ComplementaryParams div;
    div.q = 3;
    div.s = 0.3;
    auto rd = equator_delta_gram(div, phi, phi, 0, 5, 48);
    CHECK(rd.diverged);
    ComplementaryParams conv;
    conv.q = 3;
    conv.s = 0.72;
    auto rc = equator_delta_gram(conv, phi, phi, 0, 5, 48);
    CHECK_FALSE(rc.diverged);
    // two-step cumulative growth below the threshold
    double g2 = rd.growth * rd.growth;
    CHECK(g2 >= 1.5);
}

TEST_CASE("restriction_J: exponent readings and the degenerate multiplier") {
    ComplementaryParams p;
    p.q = 3;
    p.s = 0.4;
    auto grid = SphereGrid::make(3, 32, 64, 0.25);
    auto f = sample_sphere(grid,
                           [](const Vec3& x) { return cplx(1.0 + 0.1 * x[0]); });
    auto jf = restriction_J(p, f, JExponent::verbatim);
    bool nonzero = true;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (jf.values[i] == cplx(0.0)) nonzero = false;
    CHECK(nonzero);
    ComplementaryParams pd = p;
    pd.s = 0.5 * (pd.q - 1) - 1e-13;
    auto jd = restriction_J(pd, f, JExponent::verbatim);
    double dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        dev = std::max(dev, std::abs(jd.values[i] - f.values[i]));
    CHECK(dev < 1e-10);
}

TEST_CASE("restriction_J intertwines the equator-fixing subgroup") {
    ComplementaryParams p;
    p.q = 3;
    p.s = 0.4;
    ComplementaryParams p0 = p;
    p0.principal = true;
    p0.sigma = 0.0;
    auto grid = SphereGrid::make(3, 48, 96, 0.25);
    auto f = sample_sphere(grid, [](const Vec3& x) {
        return cplx((1.0 + 0.3 * x[0]) * (1.0 - 0.2 * x[1]));
    });
    std::vector<LorentzElement> hs;
    hs.push_back(LorentzElement::boost(3, 1, 0.3));
    hs.push_back(LorentzElement::spatial_rotation(3, 1, 2, 0.6));
    double best = 1e300;
    for (auto mode : {JExponent::intertwine_minus_s, JExponent::intertwine_plus_s,
                      JExponent::verbatim}) {
        for (int lsign : {+1, -1}) {
            double worst = 0.0;
            for (const auto& h : hs) {
                auto lhs = restriction_J(p, comp_action(p, h, f, lsign), mode);
                auto rhs = comp_action(p0, h, restriction_J(p, f, mode));
                double dev = 0.0, scale = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    dev += grid.weights[i] * std::norm(lhs.values[i] - rhs.values[i]);
                    scale += grid.weights[i] * std::norm(rhs.values[i]);
                }
                worst = std::max(worst, std::sqrt(dev / scale));
            }
            best = std::min(best, worst);
        }
    }
    CHECK(best < 1e-5);
}
