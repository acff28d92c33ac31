#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glharm/report.hpp"

using namespace glharm;
using namespace glharm::cli;
namespace fs = std::filesystem;

TEST_CASE("config parsing: keys, comments, typed getters") {
    fs::path p = fs::temp_directory_path() / "glharm_cfg_test.cfg";
    {
        std::ofstream os(p);
        os << "# comment\n";
        os << "suite = specfun-selftest\n";
        os << "threads = 2\n";
        os << "cache = on\n";
        os << "tau_max = 5.5   # trailing comment\n";
        os << "theta_nodes = 48\n";
    }
    auto cfg = RunConfig::from_file(p.string());
    CHECK(cfg.suite == "specfun-selftest");
    CHECK(cfg.threads == 2);
    CHECK(cfg.cache);
    CHECK(cfg.num("tau_max", 0.0) == doctest::Approx(5.5));
    CHECK(cfg.count("theta_nodes", 0) == 48);
    CHECK(cfg.num("missing", 1.25) == doctest::Approx(1.25));
    fs::remove(p);
}

TEST_CASE("unknown suite is rejected before any computation") {
    RunConfig cfg;
    cfg.suite = "no-such-suite";
    CHECK_THROWS_AS(run_suite(cfg), std::invalid_argument);
}

TEST_CASE("specfun suite runs clean and serializes deterministically") {
    RunConfig cfg;
    cfg.suite = "specfun-selftest";
    Report rep = run_suite(cfg);
    CHECK(rep.cases.size() > 10);
    CHECK(rep.all_pass());

    std::ostringstream j1, j2;
    write_report_json(rep, j1);
    write_report_json(rep, j2);
    CHECK(j1.str() == j2.str());

    std::ostringstream c1, c2;
    write_report_csv(rep, c1);
    write_report_csv(rep, c2);
    CHECK(c1.str() == c2.str());

    // row count equals case count (header + cases)
    std::size_t rows = 0;
    std::istringstream is(c1.str());
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == rep.cases.size() + 1);

    // json round trips through the documented schema
    Report back = parse_report_json(j1.str());
    CHECK(back.suite == rep.suite);
    REQUIRE(back.cases.size() == rep.cases.size());
    for (std::size_t i = 0; i < rep.cases.size(); ++i) {
        CHECK(back.cases[i].id == rep.cases[i].id);
        CHECK(back.cases[i].pass == rep.cases[i].pass);
        CHECK(back.cases[i].fields == rep.cases[i].fields);
    }
    std::ostringstream c3;
    write_report_csv(back, c3);
    CHECK(c3.str() == c1.str());
}

TEST_CASE("results are independent of the parallelism degree") {
    RunConfig c1, c2;
    c1.suite = c2.suite = "opcalc-verify";
    c1.raw["functions"] = c2.raw["functions"] = "1";
    c1.raw["points"] = c2.raw["points"] = "1";
    c1.raw["ts_nodes"] = c2.raw["ts_nodes"] = "10";
    c1.raw["fiber_nodes"] = c2.raw["fiber_nodes"] = "8";
    c1.threads = 1;
    c2.threads = 2;
    Report r1 = run_suite(c1), r2 = run_suite(c2);
    REQUIRE(r1.cases.size() == r2.cases.size());
    for (std::size_t i = 0; i < r1.cases.size(); ++i)
        CHECK(r1.cases[i].fields == r2.cases[i].fields);
}

TEST_CASE("evaluation budget cap rejects oversized runs") {
    RunConfig cfg;
    cfg.suite = "opcalc-verify";
    cfg.max_evals = 10;
    CHECK_THROWS_WITH_AS(run_suite(cfg),
                         doctest::Contains("resource budget exceeded"),
                         std::runtime_error);
}

TEST_CASE("cached kernels round trip through the disk format") {
    fs::path dir = fs::temp_directory_path() / "glharm_cache_unit";
    fs::remove_all(dir);
    auto f = standard_box_family()[0];
    auto p = fourier::PrincipalSeriesPoint::unitary(0.3, 0, -0.5, 1);
    auto tg = numerics::gauss_legendre(6, -1.0, 1.0);
    fourier::FiberQuad q;
    q.na = q.nc = q.nd = 8;
    bool hit = true;
    auto k1 = cached_kernel_transform(dir.string(), f, p, tg, tg, q,
                                      fourier::KernelDeriv::value, 0, &hit);
    CHECK_FALSE(hit);
    auto k2 = cached_kernel_transform(dir.string(), f, p, tg, tg, q,
                                      fourier::KernelDeriv::value, 0, &hit);
    CHECK(hit);
    for (std::size_t i = 0; i < k1.values.size(); ++i)
        CHECK(std::abs(k1.values[i] - k2.values[i]) == 0.0);
    fs::remove_all(dir);
}
