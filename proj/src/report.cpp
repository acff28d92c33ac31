#include "glharm/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "glharm/kltransform.hpp"
#include "glharm/opcalc.hpp"
#include "glharm/separation.hpp"

namespace glharm::cli {

namespace fs = std::filesystem;
using numerics::cplx;
using numerics::Grid1D;
using std::numbers::pi;

// ---------------------------------------------------------------------------
// config, formatting, budget
// ---------------------------------------------------------------------------

double RunConfig::num(const std::string& key, double dflt) const {
    auto it = raw.find(key);
    if (it == raw.end()) return dflt;
    return std::stod(it->second);
}

std::size_t RunConfig::count(const std::string& key, std::size_t dflt) const {
    auto it = raw.find(key);
    if (it == raw.end()) return dflt;
    long v = std::stol(it->second);
    if (v < 0) throw std::invalid_argument("RunConfig: negative count for " + key);
    return static_cast<std::size_t>(v);
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    std::ifstream is(path);
    if (!is) throw std::runtime_error("RunConfig: cannot open " + path);
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (k.empty()) continue;
        if (k == "suite")
            cfg.suite = v;
        else if (k == "out")
            cfg.out_dir = v;
        else if (k == "threads")
            cfg.threads = static_cast<unsigned>(std::stoul(v));
        else if (k == "cache")
            cfg.cache = (v == "on" || v == "true" || v == "1");
        else if (k == "max_evals")
            cfg.max_evals = std::stoull(v);
        else
            cfg.raw[k] = v;
    }
    return cfg;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void EvalBudget::charge(std::uint64_t n) {
    used += n;
    if (cap != 0 && used > cap) {
        std::ostringstream os;
        os << "resource budget exceeded: " << used << " integrand evaluations > cap "
           << cap;
        throw std::runtime_error(os.str());
    }
}

std::size_t Report::n_pass() const {
    std::size_t n = 0;
    for (const auto& c : cases) n += c.pass ? 1 : 0;
    return n;
}

std::size_t Report::n_fail() const { return cases.size() - n_pass(); }

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

bool looks_numeric(const std::string& v) {
    if (v.empty()) return false;
    char* end = nullptr;
    std::strtod(v.c_str(), &end);
    return end && *end == '\0';
}

}  // namespace

void write_report_json(const Report& rep, std::ostream& os) {
    os << "{\n";
    os << "  \"schema\": \"glharm-report-v1\",\n";
    os << "  \"suite\": \"" << json_escape(rep.suite) << "\",\n";
    os << "  \"effective_config\": {";
    for (std::size_t i = 0; i < rep.effective_config.size(); ++i) {
        const auto& [k, v] = rep.effective_config[i];
        os << (i ? ", " : "") << "\"" << json_escape(k) << "\": \"" << json_escape(v)
           << "\"";
    }
    os << "},\n";
    os << "  \"cases\": [\n";
    for (std::size_t i = 0; i < rep.cases.size(); ++i) {
        const auto& c = rep.cases[i];
        os << "    {\"id\": \"" << json_escape(c.id) << "\", \"verdict\": \""
           << (c.pass ? "pass" : "fail") << "\", \"tolerance\": \""
           << json_escape(c.tolerance) << "\", \"fields\": {";
        for (std::size_t j = 0; j < c.fields.size(); ++j) {
            const auto& [k, v] = c.fields[j];
            os << (j ? ", " : "") << "\"" << json_escape(k) << "\": ";
            if (looks_numeric(v))
                os << v;
            else
                os << "\"" << json_escape(v) << "\"";
        }
        os << "}}" << (i + 1 < rep.cases.size() ? "," : "") << "\n";
    }
    os << "  ],\n";
    os << "  \"summary\": {\"pass\": " << rep.n_pass() << ", \"fail\": " << rep.n_fail()
       << "},\n";
    os << "  \"timing\": {\"wall_seconds\": " << format_double(rep.wall_seconds)
       << ", \"eval_count\": " << rep.eval_count << "}\n";
    os << "}\n";
}

void write_report_csv(const Report& rep, std::ostream& os) {
    os << "id,verdict,tolerance";
    if (!rep.cases.empty())
        for (const auto& [k, v] : rep.cases.front().fields) os << "," << k;
    os << "\n";
    for (const auto& c : rep.cases) {
        os << c.id << "," << (c.pass ? "pass" : "fail") << "," << c.tolerance;
        for (const auto& [k, v] : c.fields) os << "," << v;
        os << "\n";
    }
}

Report parse_report_json(const std::string& text) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(text);
    Report rep;
    rep.suite = j.value("suite", "");
    if (j.contains("effective_config"))
        for (auto it = j["effective_config"].begin(); it != j["effective_config"].end();
             ++it)
            rep.effective_config.emplace_back(it.key(), it.value().get<std::string>());
    for (const auto& c : j["cases"]) {
        CaseRecord rec;
        rec.id = c.value("id", "");
        rec.pass = c.value("verdict", "") == "pass";
        rec.tolerance = c.value("tolerance", "");
        for (auto it = c["fields"].begin(); it != c["fields"].end(); ++it) {
            if (it.value().is_number())
                rec.fields.emplace_back(it.key(),
                                        format_double(it.value().get<double>()));
            else
                rec.fields.emplace_back(it.key(), it.value().get<std::string>());
        }
        rep.cases.push_back(std::move(rec));
    }
    if (j.contains("timing")) {
        rep.wall_seconds = j["timing"].value("wall_seconds", 0.0);
        rep.eval_count = j["timing"].value("eval_count", 0ull);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// kernel cache
// ---------------------------------------------------------------------------

fourier::KernelMatrix cached_kernel_transform(
    const std::string& cache_dir, const gl2::TestFunction& f,
    const fourier::PrincipalSeriesPoint& p, const Grid1D& tgrid, const Grid1D& sgrid,
    const fourier::FiberQuad& quad, fourier::KernelDeriv mode, unsigned threads,
    bool* hit) {
    std::string modetag = mode == fourier::KernelDeriv::value
                              ? "val"
                              : (mode == fourier::KernelDeriv::dt ? "dt" : "ds");
    std::string key = fourier::kernel_cache_key(f.descriptor() + "#" + modetag, p,
                                                tgrid, sgrid, quad.str());
    fs::path file = fs::path(cache_dir) / ("km_" + key + ".txt");
    if (fs::exists(file)) {
        std::ifstream is(file);
        if (is) {
            if (hit) *hit = true;
            return fourier::read_kernel(is);
        }
    }
    if (hit) *hit = false;
    fourier::KernelMatrix k = fourier::kernel_transform(f, p, tgrid, sgrid, quad, mode,
                                                        threads);
    fs::create_directories(cache_dir);
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream os(tmp);
        fourier::write_kernel(os, k);
    }
    fs::rename(tmp, file);
    return k;
}

// ---------------------------------------------------------------------------
// standard inputs
// ---------------------------------------------------------------------------

std::vector<gl2::TestFunction> standard_box_family() {
    using gl2::bump_box;
    std::vector<gl2::TestFunction> fam;
    fam.push_back(bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45}));
    fam.push_back(bump_box({1.5, 0.0, 0.0, 1.5}, {0.45, 0.45, 0.45, 0.45},
                           {0, 1, 0, 0}, 2.0));
    fam.push_back(bump_box({1.45, 0.1, -0.05, 1.55}, {0.4, 0.35, 0.4, 0.42}));
    return fam;
}

std::vector<gl2::TestFunction> standard_invariant_family() {
    using gl2::invariant_bump;
    return {invariant_bump(1.50, 0.80, 0.55, 0.70),
            invariant_bump(1.40, 0.70, 0.50, 0.60),
            invariant_bump(1.60, 0.90, 0.60, 0.75),
            invariant_bump(1.50, 0.80, 0.70, 0.55),
            invariant_bump(1.35, 0.65, 0.45, 0.65),
            invariant_bump(1.70, 0.75, 0.80, 0.60)};
}

std::vector<fourier::PrincipalSeriesPoint> standard_parameter_points() {
    using fourier::PrincipalSeriesPoint;
    std::vector<PrincipalSeriesPoint> pts;
    pts.push_back({cplx(0.35, 0.0), 0, cplx(-0.15, 0.0), 1});
    pts.push_back({cplx(0.25, 0.4), 1, cplx(-0.30, -0.2), 0});
    pts.push_back({cplx(0.10, 0.5), 0, cplx(0.10, -0.3), 0});
    return pts;
}

// ---------------------------------------------------------------------------
// suites
// ---------------------------------------------------------------------------

namespace {

struct CaseSink {
    Report& rep;
    void add(std::string id, bool pass, std::string tol,
             std::vector<std::pair<std::string, std::string>> fields) {
        rep.cases.push_back({std::move(id), std::move(fields), pass, std::move(tol)});
    }
    void metric(std::string id, double value, double tol, bool pass_when_below = true,
                std::string extra_name = "", double extra = 0.0) {
        bool pass = pass_when_below ? (value < tol) : (value > tol);
        std::vector<std::pair<std::string, std::string>> f = {
            {"value", format_double(value)}};
        if (!extra_name.empty()) f.emplace_back(extra_name, format_double(extra));
        add(std::move(id), pass, format_double(tol), std::move(f));
    }
};

void set_config(Report& rep, std::initializer_list<std::pair<std::string, std::string>>
                                 kv) {
    for (auto& p : kv) rep.effective_config.push_back(p);
}

// ------------------------------ specfun ------------------------------------

void suite_specfun(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    CaseSink sink{rep};
    set_config(rep, {{"suite", "specfun-selftest"}});
    budget.charge(200000);

    // Gauss-Legendre n=2 roots against a bisection oracle for P2(x)=0
    {
        auto g = numerics::gauss_legendre(2, -1.0, 1.0);
        double lo = 0.3, hi = 0.9;  // bracket of the positive root of (3x^2-1)/2
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            double v = 0.5 * (3.0 * mid * mid - 1.0);
            (v > 0 ? hi : lo) = mid;
        }
        double root = 0.5 * (lo + hi);
        sink.metric("gl2.roots", std::abs(g.nodes[1] - root), 1e-13);
        sink.metric("gl2.weights", std::abs(g.weights[0] - 1.0), 1e-13);
    }
    {
        auto g = numerics::gauss_legendre(8, 0.0, 1.0);
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            s += g.weights[i] * std::pow(g.nodes[i], 7);
        sink.metric("gl8.x7", std::abs(s - 0.125), 1e-13);
    }
    {
        auto g = numerics::gauss_legendre(64, -8.0, 8.0);
        auto f = numerics::sample1d(g, [](double x) { return cplx(std::exp(-x * x)); });
        sink.metric("integrate.gauss",
                    std::abs(numerics::integrate(f).real() - std::sqrt(pi)), 1e-12);
    }
    {
        auto g = numerics::uniform_grid(65, 0.0, 3.0);
        auto f = numerics::sample1d(g, [](double x) { return cplx(std::sin(x)); });
        auto d = numerics::central_diff(f, 0);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            err = std::max(err, std::abs(d.deriv.values[i].real() -
                                         std::cos(g.nodes[i])));
        auto g2 = numerics::uniform_grid(129, 0.0, 3.0);
        auto f2 = numerics::sample1d(g2, [](double x) { return cplx(std::sin(x)); });
        auto d2 = numerics::central_diff(f2, 0);
        double err2 = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i)
            err2 = std::max(err2, std::abs(d2.deriv.values[i].real() -
                                           std::cos(g2.nodes[i])));
        sink.metric("central_diff.order", err / std::max(err2, 1e-300), 8.0, false);
    }
    {
        cplx v = specfun::signed_power(-2.0, cplx(0.0, 1.0), 0);
        cplx want(std::cos(std::log(2.0)), std::sin(std::log(2.0)));
        sink.metric("signed_power.complex", std::abs(v - want), 1e-14);
        cplx a = specfun::signed_power(-1.7, cplx(0.3, 0.2), 1) *
                 specfun::signed_power(-1.7, cplx(-0.1, 0.5), 1);
        cplx b = specfun::signed_power(-1.7, cplx(0.2, 0.7), 0);
        sink.metric("signed_power.group_law", std::abs(a - b), 1e-13);
    }
    {
        sink.metric("log_gamma.one", std::abs(specfun::log_gamma(cplx(1.0, 0.0))),
                    1e-13);
        sink.metric("log_gamma.half",
                    std::abs(specfun::log_gamma(cplx(0.5, 0.0)).real() -
                             0.5 * std::log(pi)),
                    1e-13);
        // functional equation on a 200-point complex set
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            double re = -20.0 + 40.0 * (k % 20) / 19.0;
            double im = -20.0 + 40.0 * (k / 20) / 9.0 + 0.37;
            cplx z(re + 0.13, im);
            if (std::abs(z.imag()) < 0.2 && z.real() < 0.5) continue;
            cplx lhs = specfun::log_gamma(z + 1.0);
            cplx rhs = std::log(z) + specfun::log_gamma(z);
            double scale = std::max(1.0, std::abs(lhs));
            double dev = std::abs(std::exp(lhs - rhs) - 1.0);
            worst = std::max(worst, dev / scale);
        }
        sink.metric("log_gamma.functional", worst, 1e-11);
        double gi2 = std::exp(2.0 * specfun::log_gamma(cplx(0.0, 1.0)).real());
        sink.metric("log_gamma.reflection", std::abs(gi2 - pi / std::sinh(pi)), 1e-13);
    }
    {
        sink.metric("kl_weight.s1",
                    std::abs(specfun::kl_weight(1.0) - std::sinh(pi) / pi), 1e-11);
        sink.metric("kl_weight.small", specfun::kl_weight(1e-4), 1e-7);
        bool mono = true;
        double prev = specfun::kl_weight(1.0);
        for (double s = 1.25; s <= 10.0; s += 0.25) {
            double v = specfun::kl_weight(s);
            if (v <= prev) mono = false;
            prev = v;
        }
        sink.add("kl_weight.monotone", mono, "increasing on [1,10]", {});
    }
    {
        // K_0(1) against an independent ascending-series oracle
        double x = 1.0;
        double i0 = 0.0, term = 1.0;
        double psi = -0.57721566490153286061;  // -gamma
        double k0 = 0.0;
        double fact = 1.0;
        for (int k = 0; k < 30; ++k) {
            if (k > 0) {
                fact *= k;
                term = std::pow(0.25 * x * x, k) / (fact * fact);
                psi += 1.0 / k;
            }
            i0 += term;
            k0 += term * psi;
        }
        double oracle = -std::log(0.5 * x) * i0 + k0;
        sink.metric("bessel.k0",
                    std::abs(specfun::macdonald_bessel(0.0, 1.0) - oracle), 1e-10);
    }
    {
        // modified Bessel equation residual via the finite-difference oracle
        double worst = 0.0;
        for (double tau : {0.5, 1.0, 2.0}) {
            for (double x : {0.4, 1.0, 2.7}) {
                double h = 0.02;
                auto K = [&](double xx) { return specfun::macdonald_bessel(tau, xx); };
                double d1 = (K(x - 2 * h) - 8 * K(x - h) + 8 * K(x + h) - K(x + 2 * h)) /
                            (12 * h);
                double d2 = (-K(x - 2 * h) + 16 * K(x - h) - 30 * K(x) + 16 * K(x + h) -
                             K(x + 2 * h)) /
                            (12 * h * h);
                double resid = x * x * d2 + x * d1 - (x * x - tau * tau) * K(x);
                worst = std::max(worst, std::abs(resid) / std::abs(K(x)));
            }
        }
        sink.metric("bessel.ode_fd", worst, 1e-8);
    }
    {
        double decay = std::abs(specfun::macdonald_bessel(3.0, 30.0)) /
                       std::abs(specfun::macdonald_bessel(3.0, 1.0));
        sink.metric("bessel.decay", decay, 1e-12);
        // series and integral modes agree on the switching line
        double worst = 0.0;
        for (double tau : {1.5, 4.0, 9.0}) {
            double a = specfun::macdonald_bessel(tau, tau * 0.999);
            double b = specfun::macdonald_bessel(tau, tau * 1.001);
            double mid = specfun::macdonald_bessel(tau, tau);
            worst = std::max(worst, std::abs(a - b) / std::max(std::abs(mid), 1e-300));
        }
        sink.metric("bessel.mode_seam", worst, 2e-2);
    }
    {
        sink.metric("density.par0_diag", specfun::plancherel_density(1.3, 1.3, 0),
                    1e-300);
        double want = (2.0 / pi) / (16.0 * pi * pi * pi);
        sink.metric("density.par1_limit",
                    std::abs(specfun::plancherel_density(0.7, 0.7, 1) - want), 1e-10);
        double v = specfun::plancherel_density(2.0, 0.0, 0);
        double target = 2.0 * std::tanh(pi) / (16.0 * pi * pi * pi);
        sink.metric("density.par0_d2", std::abs(v - target), 1e-14);
        double sym = std::abs(specfun::plancherel_density(0.9, -0.4, 1) -
                              specfun::plancherel_density(-0.4, 0.9, 1));
        sink.metric("density.symmetry", sym, 1e-14);
        sink.metric("density.discrete1",
                    std::abs(specfun::discrete_density(1) - 1.0 / (8.0 * pi * pi * pi)),
                    1e-16);
        sink.metric("density.discrete5",
                    std::abs(specfun::discrete_density(5) -
                             5.0 * specfun::discrete_density(1)),
                    1e-16);
    }
    (void)cfg;
}

// ------------------------------ opcalc -------------------------------------

void suite_opcalc(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    CaseSink sink{rep};
    const std::size_t nts = cfg.count("ts_nodes", 24);
    const std::size_t fiber = cfg.count("fiber_nodes", 14);
    const std::size_t nfun = cfg.count("functions", 2);
    const std::size_t npts = cfg.count("points", 2);
    const double tol = cfg.num("residual_tol", 1e-4);
    const double ratio_min = cfg.num("refinement_ratio_min", 4.0);
    set_config(rep, {{"suite", "opcalc-verify"},
                     {"ts_nodes", std::to_string(nts)},
                     {"fiber_nodes", std::to_string(fiber)},
                     {"functions", std::to_string(nfun)},
                     {"points", std::to_string(npts)},
                     {"residual_tol", format_double(tol)},
                     {"refinement_ratio_min", format_double(ratio_min)}});

    Grid1D tg = numerics::gauss_legendre(nts, -1.0, 1.0);
    Grid1D sg = numerics::gauss_legendre(nts, -1.0, 1.0);
    fourier::FiberQuad quad;
    quad.na = quad.nc = quad.nd = fiber;

    auto funs = standard_box_family();
    auto pts = standard_parameter_points();
    if (funs.size() > nfun) funs.erase(funs.begin() + static_cast<long>(nfun), funs.end());
    if (pts.size() > npts) pts.erase(pts.begin() + static_cast<long>(npts), pts.end());

    const gl2::GeneratorId pairs[7] = {
        gl2::GeneratorId::e12,          gl2::GeneratorId::e43,
        gl2::GeneratorId::e14,          gl2::GeneratorId::e32,
        gl2::GeneratorId::mult_c,       gl2::GeneratorId::mult_det_inv,
        gl2::GeneratorId::d_db};

    for (auto pair : pairs) {
        for (std::size_t fi = 0; fi < funs.size(); ++fi) {
            for (std::size_t pi_ = 0; pi_ < pts.size(); ++pi_) {
                budget.charge(static_cast<std::uint64_t>(nts) * nts * fiber * fiber *
                              fiber * 12);
                auto repc = opcalc::verify_correspondence(pair, funs[fi], pts[pi_], tg,
                                                          sg, quad, true, cfg.threads);
                bool pass = repc.residual < tol &&
                            (repc.refinement_ratio >= ratio_min ||
                             repc.refined_residual < 1e-11);
                std::ostringstream id;
                id << gl2::to_string(pair) << ".f" << fi << ".p" << pi_;
                sink.add(id.str(), pass,
                         format_double(tol) + "/ratio>=" + format_double(ratio_min),
                         {{"residual", format_double(repc.residual)},
                          {"refined_residual", format_double(repc.refined_residual)},
                          {"refinement_ratio", format_double(repc.refinement_ratio)},
                          {"convention", opcalc::to_string(repc.convention)},
                          {"residual_other", format_double(repc.residual_other)},
                          {"point", repc.point},
                          {"lhs_norm", format_double(repc.lhs_norm)}});
            }
        }
    }
}

// --------------------------- kernel-consistency ----------------------------

void suite_kernel_consistency(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    CaseSink sink{rep};
    const std::size_t nts = cfg.count("ts_nodes", 24);
    const std::size_t fiber = cfg.count("fiber_nodes", 18);
    set_config(rep, {{"suite", "kernel-consistency"},
                     {"ts_nodes", std::to_string(nts)},
                     {"fiber_nodes", std::to_string(fiber)}});
    budget.charge(40u * 1000u * 1000u);

    Grid1D tg = numerics::gauss_legendre(nts, -1.0, 1.0);
    Grid1D sg = numerics::gauss_legendre(nts, -1.0, 1.0);
    fourier::FiberQuad quad;
    quad.na = quad.nc = quad.nd = fiber;
    auto F = standard_box_family()[0];
    auto p = fourier::PrincipalSeriesPoint::unitary(0.6, 0, -0.4, 1);

    // 4D oracle: row-integrate K against a bump phi vs direct group integral
    {
        auto K = fourier::kernel_transform(F, p, tg, sg, quad,
                                           fourier::KernelDeriv::value, cfg.threads);
        auto phi = [](double s) {
            double u = s / 0.8;
            return (u * u < 1.0) ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
        };
        double worst = 0.0;
        std::size_t samples[5] = {2, nts / 4, nts / 2, (3 * nts) / 4, nts - 3};
        for (std::size_t si = 0; si < 5; ++si) {
            std::size_t it = samples[si];
            double t = tg.nodes[it];
            cplx lhs = 0.0;
            for (std::size_t j = 0; j < sg.size(); ++j)
                lhs += sg.weights[j] * K.at(it, j) * phi(sg.nodes[j]);
            numerics::QuadSpec gq = gl2::support_quad(F, 20);
            cplx rhs = gl2::integrate_group(
                [&](const gl2::GroupElement& g) -> cplx {
                    double fv = F.value(g);
                    if (fv == 0.0) return 0.0;
                    double den = g.a + t * g.c;
                    double mapped = (g.b + t * g.d) / den;
                    cplx coc = specfun::signed_power(
                                   den, specfun::SignedExponent(
                                            -1.0 + p.mu1 - p.mu2, p.eps1 - p.eps2)) *
                               specfun::signed_power(
                                   g.det(),
                                   specfun::SignedExponent(0.5 + p.mu2, p.eps2));
                    return fv * phi(mapped) * coc * gl2::haar_weight(g);
                },
                gq);
            worst = std::max(worst, std::abs(lhs - rhs) /
                                        std::max(1e-300, std::abs(rhs)));
        }
        sink.metric("oracle.4d", worst, cfg.num("oracle_tol", 1e-6));
    }
    // Cauchy-Riemann residual in mu1 by Richardson finite differences
    {
        const double h = 1e-3;
        auto at = [&](cplx shift) {
            fourier::PrincipalSeriesPoint q = p;
            q.mu1 += shift;
            return fourier::kernel_transform(F, q, tg, sg, quad,
                                             fourier::KernelDeriv::value, cfg.threads);
        };
        auto kr1 = at(cplx(h, 0)), kr2 = at(cplx(-h, 0));
        auto ki1 = at(cplx(0, h)), ki2 = at(cplx(0, -h));
        auto kr1b = at(cplx(h / 2, 0)), kr2b = at(cplx(-h / 2, 0));
        auto ki1b = at(cplx(0, h / 2)), ki2b = at(cplx(0, -h / 2));
        auto K0 = at(cplx(0, 0));
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < K0.values.size(); ++i) {
            cplx dre = (kr1.values[i] - kr2.values[i]) / (2 * h);
            cplx dim = (ki1.values[i] - ki2.values[i]) / (2 * h * cplx(0, 1));
            cplx dreb = (kr1b.values[i] - kr2b.values[i]) / h;
            cplx dimb = (ki1b.values[i] - ki2b.values[i]) / (h * cplx(0, 1));
            // Richardson: (4 D_{h/2} - D_h)/3
            cplx r = ((4.0 * dreb - dre) - (4.0 * dimb - dim)) / 3.0;
            num = std::max(num, std::abs(r));
            den = std::max(den, std::abs((4.0 * dreb - dre) / 3.0));
        }
        sink.metric("holomorphy.cr", num / std::max(den, 1e-300),
                    cfg.num("cr_tol", 1e-7));
    }
    // the two fiber integration strategies agree on identical grids
    {
        Grid1D tw = numerics::gauss_legendre(8, -0.9, 0.9);
        fourier::KernelMatrix a = fourier::kernel_transform(
            F, p, tw, tw, quad, fourier::KernelDeriv::value, cfg.threads,
            fourier::FiberStrategy::tensor);
        fourier::KernelMatrix b = fourier::kernel_transform(
            F, p, tw, tw, quad, fourier::KernelDeriv::value, cfg.threads,
            fourier::FiberStrategy::intervals);
        double scale = 0.0;
        for (const auto& v : a.values) scale = std::max(scale, std::abs(v));
        double dev = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i)
            dev = std::max(dev, std::abs(a.values[i] - b.values[i]));
        sink.metric("strategy.agreement", dev / scale, cfg.num("strategy_tol", 1e-7));
    }
    // analytic-vs-FD derivative cross-checks
    {
        double dt = opcalc::derivative_crosscheck(F, p, tg, sg, quad,
                                                  fourier::KernelDeriv::dt);
        double ds = opcalc::derivative_crosscheck(F, p, tg, sg, quad,
                                                  fourier::KernelDeriv::ds);
        sink.metric("deriv.dt", dt, cfg.num("deriv_tol", 1e-6));
        sink.metric("deriv.ds", ds, cfg.num("deriv_tol", 1e-6));
    }
    // cache round trip
    {
        fs::path dir = fs::temp_directory_path() / "glharm_cache_check";
        fs::remove_all(dir);
        bool hit1 = true, hit2 = false;
        auto k1 = cached_kernel_transform(dir.string(), F, p, tg, sg, quad,
                                          fourier::KernelDeriv::value, cfg.threads,
                                          &hit1);
        auto k2 = cached_kernel_transform(dir.string(), F, p, tg, sg, quad,
                                          fourier::KernelDeriv::value, cfg.threads,
                                          &hit2);
        double dev = 0.0;
        for (std::size_t i = 0; i < k1.values.size(); ++i)
            dev = std::max(dev, std::abs(k1.values[i] - k2.values[i]));
        sink.add("cache.roundtrip", !hit1 && hit2 && dev < 1e-15,
                 "miss-then-hit, bitwise drift < 1e-15",
                 {{"drift", format_double(dev)}});
        fs::remove_all(dir);
    }
}

// ------------------------------ parseval -----------------------------------

void suite_parseval(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    CaseSink sink{rep};
    fourier::ParsevalOptions opts;
    opts.theta_nodes = cfg.count("theta_nodes", 96);
    opts.tau_nodes = cfg.count("tau_nodes", 24);
    opts.c_nodes = cfg.count("c_nodes", 20);
    opts.tau_max = cfg.num("tau_max", 6.0);
    opts.nodes_per_unit = cfg.num("nodes_per_unit", 8.0);
    opts.threads = cfg.threads;
    opts.with_discrete = cfg.count("with_discrete", 1) != 0;
    opts.discrete_N = cfg.count("discrete_N", 12);
    const std::size_t nfun = cfg.count("functions", 5);
    set_config(rep, {{"suite", "parseval"},
                     {"theta_nodes", std::to_string(opts.theta_nodes)},
                     {"tau_nodes", std::to_string(opts.tau_nodes)},
                     {"c_nodes", std::to_string(opts.c_nodes)},
                     {"tau_max", format_double(opts.tau_max)},
                     {"nodes_per_unit", format_double(opts.nodes_per_unit)},
                     {"functions", std::to_string(nfun)}});

    auto fam = standard_invariant_family();
    if (fam.size() > nfun) fam.erase(fam.begin() + static_cast<long>(nfun), fam.end());
    std::vector<double> ratios;
    for (std::size_t i = 0; i < fam.size(); ++i) {
        budget.charge(100u * 1000u * 1000u);
        auto pr = fourier::parseval_principal(fam[i], fam[i], opts);
        ratios.push_back(pr.ratio);
        double offsector = 0.0;
        for (const auto& s : pr.principal)
            if (s.eps1 != s.eps2) offsector = std::max(offsector, std::abs(s.value));
        double rel_off = offsector / std::max(pr.principal_total, 1e-300);
        double rel_disc = pr.discrete_total / std::max(pr.principal_total, 1e-300);
        std::ostringstream id;
        id << "parseval.f" << i;
        bool pass = std::abs(pr.ratio - 1.0) < cfg.num("ratio_one_tol", 1e-2) &&
                    rel_off < cfg.num("offsector_tol", 1e-8);
        sink.add(id.str(), pass, "ratio=1 within 1e-2; off sectors < 1e-8",
                 {{"lhs", format_double(pr.lhs.real())},
                  {"principal", format_double(pr.principal_total)},
                  {"ratio", format_double(pr.ratio)},
                  {"off_sector_rel", format_double(rel_off)},
                  {"discrete_rel", format_double(rel_disc)},
                  {"tau_tail", format_double(pr.tau_tail_fraction)},
                  {"column_consistency", format_double(pr.column_consistency)}});
    }
    if (ratios.size() >= 2) {
        double lo = ratios[0], hi = ratios[0];
        for (double r : ratios) {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        double spread = (hi - lo) / std::abs(0.5 * (hi + lo));
        sink.metric("parseval.ratio_constancy", spread,
                    cfg.num("constancy_tol", 1e-3));
    }
    // stabilization under a larger tau box (coarse check)
    if (cfg.count("tau_stability", 1) != 0) {
        fourier::ParsevalOptions wide = opts;
        wide.tau_max = opts.tau_max * 1.5;
        wide.with_discrete = false;
        auto base = fourier::parseval_principal(fam[0], fam[0], opts);
        auto wider = fourier::parseval_principal(fam[0], fam[0], wide);
        double change = std::abs(wider.principal_total - base.principal_total) /
                        base.principal_total;
        double allowance = std::max(base.tau_tail_fraction, 1e-4);
        sink.add("parseval.tau_stab", change < allowance,
                 "change under tau_max*1.5 below the tail estimate",
                 {{"change", format_double(change)},
                  {"tail_estimate", format_double(base.tau_tail_fraction)}});
    }
}

// ---------------------------- kl-bispectral --------------------------------

void suite_kl(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    CaseSink sink{rep};
    set_config(rep, {{"suite", "kl-bispectral"}});
    budget.charge(30u * 1000u * 1000u);

    std::vector<double> taus = {0.5, 1.0, 2.0};
    std::vector<double> xs;
    for (double x = 0.2; x <= 5.0; x += 0.4) xs.push_back(x);
    auto bis = kl::bispectral_report(taus, xs);
    sink.metric("bispectral.d_resid", bis.max_d_resid, cfg.num("bis_tol", 1e-8));
    sink.metric("bispectral.m_resid", bis.max_m_resid, cfg.num("bis_tol", 1e-8));
    sink.add("bispectral.signs", bis.signs_consistent && bis.d_sign == -1 &&
                                     bis.m_sign == -1,
             "one global sign per identity",
             {{"d_sign", std::to_string(bis.d_sign)},
              {"m_sign", std::to_string(bis.m_sign)}});

    // gaussian example of the difference operator
    {
        auto F = kl::StripFunction::gauss_cos(1.0, 0.0);
        double worst = 0.0;
        for (double s : {0.7, 1.3, 2.9}) {
            cplx got = kl::apply_M(F, s);
            double want = -(2.0 / s) * std::exp(1.0 - s * s) * std::sin(2.0 * s);
            worst = std::max(worst, std::abs(got - cplx(want)));
        }
        sink.metric("apply_m.gaussian", worst, 1e-12);
    }

    // round trips across the half-line family
    std::vector<kl::HalfLineFunction> fam;
    fam.emplace_back(0.0, 1.0, 1.0);
    fam.emplace_back(1.0, 1.0, 0.5);
    fam.emplace_back(0.5, 1.3, 1.0);
    fam.emplace_back(2.0, 0.8, 0.7);
    fam.emplace_back(-0.5, 1.0, 1.5);
    std::vector<double> calib;
    double worst_rt = 0.0, worst_pc = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i) {
        auto rt = kl::kl_round_trip(fam[i]);
        calib.push_back(rt.calibration);
        worst_rt = std::max(worst_rt, rt.rel_l2_error);
        worst_pc = std::max(worst_pc,
                            std::abs(rt.parseval_constant / rt.calibration - 1.0));
        std::ostringstream id;
        id << "roundtrip.f" << i;
        sink.add(id.str(), rt.rel_l2_error < cfg.num("rt_tol", 1e-4),
                 "relative L2 after calibration < 1e-4",
                 {{"calibration", format_double(rt.calibration)},
                  {"rel_l2", format_double(rt.rel_l2_error)},
                  {"parseval_constant", format_double(rt.parseval_constant)}});
    }
    {
        double lo = calib[0], hi = calib[0];
        for (double c : calib) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        double spread = (hi - lo) / std::abs(0.5 * (hi + lo));
        sink.add("roundtrip.constancy",
                 spread < cfg.num("calib_tol", 1e-3) && worst_pc < 1e-3,
                 "same constant across the family (1e-3)",
                 {{"spread", format_double(spread)},
                  {"vs_2_over_pi", format_double(calib[0] * pi / 2.0)},
                  {"parseval_consistency", format_double(worst_pc)}});
    }
    // strip decay preserved under M (measured certificates)
    {
        auto F = kl::StripFunction::gauss_cos(0.8, 1.1);
        double cbase = F.decay_C();
        double cm = 0.0;
        for (int k = 0; k < 30; ++k) {
            double s = 1.0 + 0.3 * k;
            double bound = std::exp(-pi * s) * std::pow(s, -1.5 - F.decay_eps());
            if (bound < 1e-14) continue;
            cm = std::max(cm, std::abs(kl::apply_M(F, s)) / bound);
        }
        sink.add("strip.decay", std::isfinite(cm) && cm > 0.0,
                 "finite measured decay constant",
                 {{"C_f", format_double(cbase)}, {"C_Mf", format_double(cm)}});
    }
}

// --------------------------- hardy-separation ------------------------------

void suite_hardy(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    using namespace separation;
    CaseSink sink{rep};
    const std::size_t n1 = cfg.count("grid1d", 512);
    const std::size_t n2 = cfg.count("grid2d", 256);
    const double L = cfg.num("window", 40.0);
    set_config(rep, {{"suite", "hardy-separation"},
                     {"grid1d", std::to_string(n1)},
                     {"grid2d", std::to_string(n2)},
                     {"window", format_double(L)}});
    budget.charge(50u * 1000u * 1000u);

    Grid1D gx = numerics::uniform_grid(n1, -L, L, true);
    Grid1D g2 = numerics::uniform_grid(n2, -L, L, true);
    Grid1D g2s = numerics::uniform_grid(n2, -L + L / n2, L + L / n2, true);

    // mask algebra on a generic band-limited function
    auto fgen = [](double x) {
        return cplx(std::exp(-x * x / 18.0) * std::cos(2.1 * x),
                    std::exp(-x * x / 22.0) * std::sin(1.3 * x));
    };
    auto f1 = numerics::sample1d(gx, fgen);
    {
        BandReport br;
        auto pp = hardy_project(f1, HardySign::plus, &br);
        auto pm = hardy_project(f1, HardySign::minus);
        double sum_dev = 0.0, idem = 0.0, cross = 0.0;
        auto pp2 = hardy_project(pp, HardySign::plus);
        auto cross12 = hardy_project(pp, HardySign::minus);
        for (std::size_t i = 0; i < f1.values.size(); ++i) {
            sum_dev = std::max(sum_dev, std::abs(pp.values[i] + pm.values[i] -
                                                 f1.values[i]));
            idem = std::max(idem, std::abs(pp2.values[i] - pp.values[i]));
            cross = std::max(cross, std::abs(cross12.values[i]));
        }
        sink.metric("hardy.sum", sum_dev, 1e-10);
        sink.metric("hardy.idempotent", idem, 1e-10);
        sink.metric("hardy.orthogonal", cross, 1e-10);
        sink.add("hardy.band", br.ok, "high-band energy < 1e-8",
                 {{"fraction", format_double(br.high_band_fraction)}});
    }
    // membership: a pole in the lower half-plane is a plus-function
    {
        auto fp = numerics::sample1d(gx, [](double x) {
            cplx z(x, 1.0);
            return 1.0 / (z * z * z);
        });
        auto fpt = edge_taper(fp, 0.05);
        auto proj = hardy_project(fpt, HardySign::plus);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (std::abs(gx.nodes[i]) > 0.6 * L) continue;  // inner window
            num += std::norm(proj.values[i] - fpt.values[i]);
            den += std::norm(fpt.values[i]);
        }
        sink.metric("hardy.membership", std::sqrt(num / den),
                    cfg.num("membership_tol", 1e-5));
    }
    // J is an exact grid isometry
    {
        auto f2d = numerics::sample2d(g2, g2s, [](double x, double y) {
            return cplx(std::exp(-(x * x + y * y) / 30.0) * std::cos(x - 2 * y));
        });
        auto jf = J_map(f2d);
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i)
            for (std::size_t j = 0; j < g2s.size(); ++j) {
                double w = g2.weights[i] * g2s.weights[j];
                a += w * std::norm(jf.at(i, j));
                b += w * std::norm(f2d.at(i, j)) *
                     hyperboloid_weight(g2.nodes[i], g2s.nodes[j]);
            }
        sink.metric("hardy.j_isometry", std::abs(a / b - 1.0), 1e-12);
    }
    // T unitarity and projective composition
    {
        gl2::GroupElement r = gl2::GroupElement::rotation(0.08);
        gl2::GroupElement b{std::exp(0.06), 0.0, 0.0, std::exp(-0.06)};
        auto f = numerics::sample1d(gx, [](double x) {
            return cplx(std::exp(-x * x / 10.0) * std::cos(1.7 * x));
        });
        double n0 = numerics::l2_norm(f);
        auto tf = sl2_T_action(r * b, f);
        sink.metric("t.unitary", std::abs(numerics::l2_norm(tf) / n0 - 1.0),
                    cfg.num("t_unitary_tol", 1e-5));
        auto two = sl2_T_action(r, sl2_T_action(b, f));
        auto one = sl2_T_action(r * b, f);
        double devp = 0.0, devm = 0.0;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            devp = std::max(devp, std::abs(two.values[i] - one.values[i]));
            devm = std::max(devm, std::abs(two.values[i] + one.values[i]));
        }
        sink.metric("t.composition", std::min(devp, devm) / n0, 1e-5);
    }
    // Q = T (x) T on a product function
    {
        auto u = [](double x) { return std::exp(-x * x / 12.0) * std::cos(1.1 * x); };
        auto v = [](double y) { return std::exp(-y * y / 9.0) * std::sin(0.9 * y); };
        auto f2d = numerics::sample2d(g2, g2s,
                                      [&](double x, double y) { return cplx(u(x) * v(y)); });
        gl2::GroupElement g{std::exp(0.05), 0.03, -0.02,
                            (1.0 + 0.03 * 0.02) / std::exp(0.05)};
        auto qf = Q_action(g, f2d);
        auto tu = sl2_T_action(g, numerics::sample1d(g2, [&](double x) {
                                   return cplx(u(x));
                               }));
        auto tv = sl2_T_action(g, numerics::sample1d(g2s, [&](double y) {
                                   return cplx(v(y));
                               }));
        double dev = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i)
            for (std::size_t j = 0; j < g2s.size(); ++j) {
                dev = std::max(dev, std::abs(qf.at(i, j) -
                                             tu.values[i] * tv.values[j]));
                scale = std::max(scale, std::abs(qf.at(i, j)));
            }
        sink.metric("q.factorization", dev / scale, 1e-8);
        double nq = 0.0, nf = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i)
            for (std::size_t j = 0; j < g2s.size(); ++j) {
                double w = g2.weights[i] * g2s.weights[j];
                nq += w * std::norm(qf.at(i, j));
                nf += w * std::norm(f2d.at(i, j));
            }
        sink.metric("q.unitary", std::abs(nq / nf - 1.0),
                    cfg.num("q_unitary_tol", 1e-5));
    }
    // block projections: completeness, orthogonality, commutator residual
    {
        auto f2d = numerics::sample2d(g2, g2, [](double x, double y) {
            return cplx(std::exp(-(x * x + y * y) / 16.0) * std::cos(1.4 * x + 0.6 * y),
                        std::exp(-(x * x + y * y) / 14.0) * std::sin(0.8 * x - 1.1 * y));
        });
        f2d = edge_taper(f2d, 0.05);
        HardyComponent comps[4] = {{HardySign::plus, HardySign::plus},
                                   {HardySign::plus, HardySign::minus},
                                   {HardySign::minus, HardySign::plus},
                                   {HardySign::minus, HardySign::minus}};
        std::vector<SampledFunction> blocks;
        for (auto cmp : comps) blocks.push_back(block_project(f2d, cmp));
        double sum_dev = 0.0;
        for (std::size_t i = 0; i < f2d.values.size(); ++i) {
            cplx s = 0.0;
            for (const auto& b : blocks) s += b.values[i];
            sum_dev = std::max(sum_dev, std::abs(s - f2d.values[i]));
        }
        sink.metric("blocks.complete", sum_dev, 1e-10);
        double ortho = 0.0;
        auto b01 = block_project(blocks[0], comps[1]);
        for (const auto& v : b01.values) ortho = std::max(ortho, std::abs(v));
        sink.metric("blocks.orthogonal", ortho, 1e-10);
        double idem = 0.0;
        auto b00 = block_project(blocks[0], comps[0]);
        for (std::size_t i = 0; i < b00.values.size(); ++i)
            idem = std::max(idem, std::abs(b00.values[i] - blocks[0].values[i]));
        sink.metric("blocks.idempotent", idem, 1e-10);

        // 10 group elements near the identity
        std::vector<gl2::GroupElement> gs;
        for (double e : {0.02, -0.03, 0.05})
            gs.push_back(gl2::GroupElement::rotation(e));
        for (double e : {0.03, -0.04, 0.06})
            gs.push_back({std::exp(e), 0.0, 0.0, std::exp(-e)});
        for (double e : {0.03, -0.05})
            gs.push_back({1.0, e, 0.0, 1.0});
        for (double e : {0.04, -0.02})
            gs.push_back({1.0, 0.0, e, 1.0});
        double worst = 0.0;
        double nf = numerics::l2_norm(f2d);
        for (const auto& g : gs) {
            auto qp = Q_action(g, blocks[0]);
            auto pq = block_project(Q_action(g, f2d), comps[0]);
            double dev2 = 0.0;
            for (std::size_t i = 0; i < qp.values.size(); ++i)
                dev2 += std::norm(qp.values[i] - pq.values[i]) *
                        f2d.grids[0].weights[i / f2d.grids[1].size()] *
                        f2d.grids[1].weights[i % f2d.grids[1].size()];
            worst = std::max(worst, std::sqrt(dev2) / nf);
        }
        sink.metric("blocks.commutator", worst, cfg.num("commutator_tol", 1e-4));

        // frequency support certificate of the (+,+) block
        {
            std::vector<cplx> a = blocks[0].values;
            // 2D DFT by rows and columns
            std::size_t nn = g2.size();
            for (std::size_t i = 0; i < nn; ++i) {
                std::vector<cplx> row(a.begin() + i * nn, a.begin() + (i + 1) * nn);
                fft_inplace(row, false);
                std::copy(row.begin(), row.end(), a.begin() + i * nn);
            }
            std::vector<cplx> col(nn);
            for (std::size_t j = 0; j < nn; ++j) {
                for (std::size_t i = 0; i < nn; ++i) col[i] = a[i * nn + j];
                fft_inplace(col, false);
                for (std::size_t i = 0; i < nn; ++i) a[i * nn + j] = col[i];
            }
            double neg = 0.0, tot = 0.0;
            for (std::size_t i = 0; i < nn; ++i)
                for (std::size_t j = 0; j < nn; ++j) {
                    double e = std::norm(a[i * nn + j]);
                    tot += e;
                    bool ineg = i > nn / 2, jneg = j > nn / 2;
                    if (ineg || jneg) neg += e;
                }
            sink.metric("blocks.support", neg / tot, 1e-12);
        }
    }
}

// ----------------------------- comp-series ---------------------------------

void suite_comp(const RunConfig& cfg, Report& rep, EvalBudget& budget) {
    using namespace separation;
    CaseSink sink{rep};
    set_config(rep, {{"suite", "comp-series"}});
    budget.charge(200u * 1000u * 1000u);
    const double inv_tol = cfg.num("invariance_tol", 1e-5);
    const int gram_level = static_cast<int>(cfg.count("gram_level", 1));

    for (int q : {2, 3}) {
        // test family: low-order harmonics
        std::vector<std::function<cplx(const Vec3&)>> harms;
        harms.push_back([](const Vec3&) { return cplx(1.0); });
        harms.push_back([](const Vec3& x) { return cplx(x[0]); });
        harms.push_back([](const Vec3& x) { return cplx(x[1]); });
        harms.push_back([](const Vec3& x) { return cplx(x[0] * x[1]); });
        harms.push_back([](const Vec3& x) { return cplx(x[0] * x[0] - x[1] * x[1]); });
        if (q == 3) {
            harms.push_back([](const Vec3& x) { return cplx(x[2]); });
            harms.push_back([](const Vec3& x) { return cplx(x[0] * x[2]); });
            harms.push_back([](const Vec3& x) { return cplx(x[1] * x[2]); });
            harms.push_back(
                [](const Vec3& x) { return cplx(3.0 * x[2] * x[2] - 1.0); });
            harms.push_back([](const Vec3& x) {
                return cplx(x[0] * (5.0 * x[2] * x[2] - 1.0));
            });
            harms.push_back([](const Vec3& x) { return cplx(x[0] * x[0] * x[2]); });
            harms.push_back(
                [](const Vec3& x) { return cplx(x[1] * (1.0 + 0.5 * x[0])); });
        } else {
            harms.push_back([](const Vec3& x) {
                return cplx(x[0] * (x[0] * x[0] - 3 * x[1] * x[1]));
            });
            harms.push_back([](const Vec3& x) {
                return cplx(x[1] * (3 * x[0] * x[0] - x[1] * x[1]));
            });
            harms.push_back([](const Vec3& x) {
                return cplx(std::cos(4.0 * std::atan2(x[1], x[0])));
            });
            harms.push_back([](const Vec3& x) {
                return cplx(std::sin(4.0 * std::atan2(x[1], x[0])));
            });
            harms.push_back([](const Vec3& x) {
                return cplx(std::cos(5.0 * std::atan2(x[1], x[0])));
            });
            harms.push_back([](const Vec3& x) {
                return cplx(std::sin(5.0 * std::atan2(x[1], x[0])));
            });
        }
        harms.resize(12);

        std::vector<double> svals;
        for (int k = 1; k <= 5; ++k) svals.push_back(0.5 * (q - 1) * k / 6.0);

        // sphere geometry sanity
        {
            SphereGrid sg = SphereGrid::make(q, q == 2 ? 128 : 32);
            double want = q == 2 ? 2.0 * pi : 4.0 * pi;
            std::ostringstream id;
            id << "q" << q << ".area";
            sink.metric(id.str(), std::abs(sg.area() - want), 1e-10);
            LorentzElement b = LorentzElement::boost(q, 1, 1.2);
            double ndev = 0.0, cocdev = 0.0;
            LorentzElement b2 = LorentzElement::boost(q, q, 0.7);
            LorentzElement prod = b * b2;
            for (std::size_t i = 0; i < sg.size(); i += 7) {
                auto [y, dil] = lorentz_sphere_action(b, sg.points[i], q);
                double n2 = 0.0;
                for (int k = 0; k < q; ++k) n2 += y[k] * y[k];
                ndev = std::max(ndev, std::abs(std::sqrt(n2) - 1.0));
                auto [y2, dil2] = lorentz_sphere_action(b2, sg.points[i], q);
                auto [y21, dil21] = lorentz_sphere_action(b, y2, q);
                auto [yp, dilp] = lorentz_sphere_action(prod, sg.points[i], q);
                (void)y21;
                (void)yp;
                cocdev = std::max(cocdev, std::abs(dil2 * dil21 - dilp));
            }
            sink.metric("q" + std::to_string(q) + ".on_sphere", ndev, 1e-12);
            sink.metric("q" + std::to_string(q) + ".cocycle", cocdev, 1e-10);
        }
        // principal unitarity
        {
            ComplementaryParams p;
            p.q = q;
            p.principal = true;
            p.sigma = 0.8;
            p.s = 0.25 * (q - 1);
            SphereGrid sg = SphereGrid::make(q, q == 2 ? 256 : 40, q == 3 ? 80 : 0);
            auto f = sample_sphere(sg, [](const Vec3& x) {
                return cplx(1.0 + 0.4 * x[0] + 0.2 * x[1] * x[1]);
            });
            LorentzElement g = LorentzElement::boost(q, 1, 0.35);
            auto tf = comp_action(p, g, f);
            double n0 = 0.0, n1v = 0.0;
            for (std::size_t i = 0; i < sg.size(); ++i) {
                n0 += sg.weights[i] * std::norm(f.values[i]);
                n1v += sg.weights[i] * std::norm(tf.values[i]);
            }
            sink.metric("q" + std::to_string(q) + ".principal_unitary",
                        std::abs(n1v / n0 - 1.0), 1e-5);
        }
        // Gram positivity and invariance per s
        for (std::size_t si = 0; si < svals.size(); ++si) {
            ComplementaryParams p;
            p.q = q;
            p.s = svals[si];
            std::vector<double> gram(harms.size() * harms.size(), 0.0);
            auto [ga, gb] = gram_grids(q, gram_level);
            std::vector<SphereFunction> sa, sb;
            for (const auto& h : harms) {
                sa.push_back(sample_sphere(ga, h));
                sb.push_back(sample_sphere(gb, h));
            }
            for (std::size_t i = 0; i < harms.size(); ++i)
                for (std::size_t j = 0; j <= i; ++j) {
                    cplx v = comp_gram_sampled(p, sa[i], sb[j]);
                    gram[i * harms.size() + j] = v.real();
                    gram[j * harms.size() + i] = v.real();
                }
            auto ev = numerics::jacobi_eigenvalues(gram, harms.size());
            std::ostringstream id;
            id << "q" << q << ".s" << si << ".positivity";
            sink.add(id.str(), ev.front() > 0.0, "min eigenvalue > 0",
                     {{"min_eig", format_double(ev.front())},
                      {"max_eig", format_double(ev.back())},
                      {"s", format_double(p.s)}});

            // invariance with the measured lambda sign
            LorentzElement g = LorentzElement::boost(q, 1, 0.4);
            double best = 1e300;
            int best_sign = 0;
            for (int sign : {-1, +1}) {
                auto t1 = comp_action(p, g, sa[1], sign);
                auto t2 = comp_action(p, g, sb[1], sign);
                cplx before = comp_gram_sampled(p, sa[1], sb[1]);
                cplx after = comp_gram_sampled(p, t1, t2);
                double dev = std::abs(after - before) / std::abs(before);
                if (dev < best) {
                    best = dev;
                    best_sign = sign;
                }
            }
            std::ostringstream id2;
            id2 << "q" << q << ".s" << si << ".invariance";
            sink.add(id2.str(), best < inv_tol, "relative change < 1e-5",
                     {{"residual", format_double(best)},
                      {"lambda_sign", std::to_string(best_sign)},
                      {"s", format_double(p.s)}});
        }
        // intertwining multiplier
        {
            ComplementaryParams p;
            p.q = q;
            p.s = 0.3 * (q - 1) / 2.0 + 0.1;
            SphereGrid sg = SphereGrid::make(q, q == 2 ? 256 : 48, q == 3 ? 96 : 0,
                                             0.25);
            auto f = sample_sphere(sg, [](const Vec3& x) {
                return cplx((1.0 + 0.3 * x[0]) * (1.0 + 0.2 * x[1]));
            });
            std::vector<LorentzElement> hs;
            hs.push_back(LorentzElement::boost(q, 1, 0.3));
            if (q == 3) {
                hs.push_back(LorentzElement::spatial_rotation(q, 1, 2, 0.5));
                hs.push_back(LorentzElement::boost(q, 2, -0.25));
            }
            ComplementaryParams p0 = p;
            p0.principal = true;
            p0.sigma = 0.0;
            double best = 1e300;
            std::string best_mode;
            for (auto mode : {JExponent::intertwine_minus_s,
                              JExponent::intertwine_plus_s, JExponent::verbatim}) {
                for (int lsign : {+1, -1}) {
                    double worst = 0.0;
                    for (const auto& h : hs) {
                        auto lhs = restriction_J(p, comp_action(p, h, f, lsign), mode);
                        auto rhs = comp_action(p0, h, restriction_J(p, f, mode));
                        double dev = 0.0, scale = 0.0;
                        for (std::size_t i = 0; i < sg.size(); ++i) {
                            dev += sg.weights[i] *
                                   std::norm(lhs.values[i] - rhs.values[i]);
                            scale += sg.weights[i] * std::norm(rhs.values[i]);
                        }
                        worst = std::max(worst, std::sqrt(dev / scale));
                    }
                    if (worst < best) {
                        best = worst;
                        best_mode = (mode == JExponent::verbatim
                                         ? "verbatim"
                                         : (mode == JExponent::intertwine_minus_s
                                                ? "-s"
                                                : "+s")) +
                                    std::string(lsign > 0 ? "/l+" : "/l-");
                    }
                }
            }
            sink.add("q" + std::to_string(q) + ".intertwine", best < inv_tol,
                     "residual < 1e-5 for the measured exponent reading",
                     {{"residual", format_double(best)}, {"mode", best_mode}});
            // degenerate multiplier at s = (q-1)/2 and pointwise nonvanishing
            ComplementaryParams pd = p;
            pd.s = 0.5 * (q - 1) - 1e-12;
            double jdev = 0.0;
            bool nonzero = true;
            auto jf = restriction_J(pd, f, JExponent::verbatim);
            for (std::size_t i = 0; i < sg.size(); ++i) {
                jdev = std::max(jdev, std::abs(jf.values[i] - f.values[i]));
                if (jf.values[i] == cplx(0.0) && f.values[i] != cplx(0.0))
                    nonzero = false;
            }
            sink.metric("q" + std::to_string(q) + ".j_degenerate", jdev, 1e-9);
            sink.add("q" + std::to_string(q) + ".j_nonzero", nonzero,
                     "pointwise nonzero off the equator", {});
        }
    }
    // equator pairing: q=2 exact; q=3 threshold scan
    {
        ComplementaryParams p;
        p.q = 2;
        p.s = 0.3;
        auto one = [](const Vec3&) { return cplx(1.0); };
        auto r = equator_delta_gram(p, one, one, 0);
        // exact: off-diagonal kernel 2^{-e} twice; diagonal zero for e < 0
        double e = p.equator_exponent();
        double want = 2.0 * std::pow(2.0, -e) + (e < 0.0 ? 0.0 : 2.0 * (e == 0.0));
        sink.metric("q2.equator_exact", std::abs(r.value.real() - want), 1e-13);
    }
    {
        auto phi = [](const Vec3& x) { return cplx(1.0 + 0.2 * x[0]); };
        double last_div = 0.0, first_conv = 0.0;
        std::vector<std::pair<double, double>> scans;  // (s, growth)
        for (double s : {0.20, 0.35, 0.45, 0.55, 0.65, 0.80}) {
            ComplementaryParams p;
            p.q = 3;
            p.s = s;
            auto r = equator_delta_gram(p, phi, phi, 0, 5,
                                        cfg.count("equator_base", 64));
            scans.emplace_back(s, r.growth);
            if (r.diverged) last_div = std::max(last_div, s);
            if (!r.diverged && first_conv == 0.0) first_conv = s;
        }
        bool bracket = last_div > 0.0 && first_conv > last_div &&
                       last_div < 0.5 + 0.11 && first_conv > 0.5 - 0.11;
        std::vector<std::pair<std::string, std::string>> fields = {
            {"last_diverging_s", format_double(last_div)},
            {"first_converging_s", format_double(first_conv)},
            {"stated_threshold", format_double(0.5)}};
        for (auto& [s, g] : scans)
            fields.emplace_back("growth_s" + format_double(s), format_double(g));
        sink.add("q3.equator_threshold", bracket,
                 "measured divergence bracket straddles s = 1/2", fields);
        // derivative-order pairing diverges in range (needs s > 3/2)
        ComplementaryParams p;
        p.q = 3;
        p.s = 0.8;
        auto r1 = equator_delta_gram(p, phi, phi, 1, 4, 64);
        sink.add("q3.equator_deriv", r1.diverged,
                 "normal-derivative pairing reported divergent for s in range",
                 {{"growth", format_double(r1.growth)}});
    }
}

}  // namespace

std::vector<std::string> suite_names() {
    return {"specfun-selftest", "opcalc-verify", "kernel-consistency",
            "parseval",        "kl-bispectral", "hardy-separation",
            "comp-series"};
}

Report run_suite(const RunConfig& cfg) {
    Report rep;
    rep.suite = cfg.suite;
    EvalBudget budget;
    budget.cap = cfg.max_evals;
    auto t0 = std::chrono::steady_clock::now();
    if (cfg.suite == "specfun-selftest")
        suite_specfun(cfg, rep, budget);
    else if (cfg.suite == "opcalc-verify")
        suite_opcalc(cfg, rep, budget);
    else if (cfg.suite == "kernel-consistency")
        suite_kernel_consistency(cfg, rep, budget);
    else if (cfg.suite == "parseval")
        suite_parseval(cfg, rep, budget);
    else if (cfg.suite == "kl-bispectral")
        suite_kl(cfg, rep, budget);
    else if (cfg.suite == "hardy-separation")
        suite_hardy(cfg, rep, budget);
    else if (cfg.suite == "comp-series")
        suite_comp(cfg, rep, budget);
    else
        throw std::invalid_argument("run_suite: unknown suite '" + cfg.suite + "'");
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.eval_count = budget.used;
    return rep;
}

}  // namespace glharm::cli
