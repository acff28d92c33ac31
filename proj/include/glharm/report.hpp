#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "glharm/fourier.hpp"

namespace glharm::cli {

// Flat key=value configuration; every knob a suite actually uses is echoed
// into the report as the effective config.
struct RunConfig {
    std::string suite;
    std::string out_dir;
    unsigned threads = 0;
    bool cache = false;
    std::uint64_t max_evals = 0;  // 0 = uncapped
    std::map<std::string, std::string> raw;

    double num(const std::string& key, double dflt) const;
    std::size_t count(const std::string& key, std::size_t dflt) const;
    static RunConfig from_file(const std::string& path);
};

struct CaseRecord {
    std::string id;
    // fixed field schema per suite; values preformatted (17 significant digits)
    std::vector<std::pair<std::string, std::string>> fields;
    bool pass = false;
    std::string tolerance;
};

struct Report {
    std::string suite;
    std::vector<std::pair<std::string, std::string>> effective_config;
    std::vector<CaseRecord> cases;
    double wall_seconds = 0.0;
    std::uint64_t eval_count = 0;

    std::size_t n_pass() const;
    std::size_t n_fail() const;
    bool all_pass() const { return n_fail() == 0; }
};

// Closed suite list: specfun-selftest | opcalc-verify | kernel-consistency |
// parseval | kl-bispectral | hardy-separation | comp-series.
std::vector<std::string> suite_names();
Report run_suite(const RunConfig& cfg);

std::string format_double(double x);  // fixed 17-significant-digit form
void write_report_json(const Report& rep, std::ostream& os);
void write_report_csv(const Report& rep, std::ostream& os);
Report parse_report_json(const std::string& text);

// Kernel transform with a disk cache keyed by the function descriptor,
// parameter point, grids and quadrature spec.
fourier::KernelMatrix cached_kernel_transform(
    const std::string& cache_dir, const gl2::TestFunction& f,
    const fourier::PrincipalSeriesPoint& p, const numerics::Grid1D& tgrid,
    const numerics::Grid1D& sgrid, const fourier::FiberQuad& quad,
    fourier::KernelDeriv mode = fourier::KernelDeriv::value, unsigned threads = 0,
    bool* hit = nullptr);

struct EvalBudget {
    std::uint64_t cap = 0;
    std::uint64_t used = 0;
    void charge(std::uint64_t n);  // throws when the cap would be exceeded
};

// Shared standard inputs of the verification suites.
std::vector<gl2::TestFunction> standard_box_family();
std::vector<gl2::TestFunction> standard_invariant_family();
std::vector<fourier::PrincipalSeriesPoint> standard_parameter_points();

}  // namespace glharm::cli
