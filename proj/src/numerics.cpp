#include "glharm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace glharm::numerics {

void Grid1D::validate() const {
    if (nodes.size() != weights.size())
        throw std::invalid_argument("Grid1D: node/weight count mismatch");
    if (nodes.size() < 2) throw std::invalid_argument("Grid1D: need at least 2 nodes");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1]))
            throw std::invalid_argument("Grid1D: nodes must be strictly increasing");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("Grid1D: weights must be positive");
}

bool Grid1D::is_uniform(double* step) const {
    if (nodes.size() < 2) return false;
    double h = nodes[1] - nodes[0];
    double span = nodes.back() - nodes.front();
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (std::abs(nodes[i + 1] - nodes[i] - h) > 1e-12 * std::max(1.0, span))
            return false;
    if (step) *step = h;
    return true;
}

namespace {

// Legendre P_n and its derivative at x by the three-term recurrence.
std::pair<double, double> legendre_pd(std::size_t n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (std::size_t k = 1; k < n; ++k) {
        double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

}  // namespace

Grid1D gauss_legendre(std::size_t n, double a, double b) {
    if (n < 2) throw std::invalid_argument("gauss_legendre: n must be >= 2");
    if (!(a < b)) throw std::invalid_argument("gauss_legendre: need a < b");

    Grid1D g;
    g.kind = GridKind::gauss_legendre;
    g.nodes.resize(n);
    g.weights.resize(n);

    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Chebyshev-like initial guess (largest root first), Newton to 1e-15.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            auto [p, d] = legendre_pd(n, x);
            dp = d;
            double dx = p / d;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                dp = legendre_pd(n, x).second;
                break;
            }
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.nodes[i] = -x;
        g.weights[i] = w;
        g.nodes[n - 1 - i] = x;
        g.weights[n - 1 - i] = w;
    }
    // map [-1,1] -> [a,b]
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < n; ++i) {
        g.nodes[i] = mid + half * g.nodes[i];
        g.weights[i] *= half;
    }
    g.validate();
    return g;
}

Grid1D uniform_grid(std::size_t n, double a, double b, bool periodic) {
    if (n < 2) throw std::invalid_argument("uniform_grid: n must be >= 2");
    if (!(a < b)) throw std::invalid_argument("uniform_grid: need a < b");
    Grid1D g;
    g.kind = GridKind::uniform;
    g.nodes.resize(n);
    g.weights.resize(n);
    if (periodic) {
        double h = (b - a) / n;
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes[i] = a + i * h;
            g.weights[i] = h;
        }
    } else {
        double h = (b - a) / (n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes[i] = a + i * h;
            g.weights[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        }
    }
    g.validate();
    return g;
}

Grid1D tan_compactified(std::size_t n) {
    const double half_pi = 0.5 * std::numbers::pi;
    Grid1D theta = gauss_legendre(n, -half_pi, half_pi);
    Grid1D g;
    g.kind = GridKind::gauss_legendre;
    g.nodes.resize(n);
    g.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double c = std::cos(theta.nodes[i]);
        g.nodes[i] = std::tan(theta.nodes[i]);
        g.weights[i] = theta.weights[i] / (c * c);
    }
    g.validate();
    return g;
}

Grid1D composite_gauss(std::size_t per_panel, std::size_t panels, double a, double b) {
    if (panels < 1) throw std::invalid_argument("composite_gauss: need panels >= 1");
    if (panels == 1) return gauss_legendre(per_panel, a, b);
    Grid1D g;
    g.kind = GridKind::gauss_legendre;
    double h = (b - a) / panels;
    for (std::size_t p = 0; p < panels; ++p) {
        Grid1D panel = gauss_legendre(per_panel, a + p * h, a + (p + 1) * h);
        g.nodes.insert(g.nodes.end(), panel.nodes.begin(), panel.nodes.end());
        g.weights.insert(g.weights.end(), panel.weights.begin(), panel.weights.end());
    }
    g.validate();
    return g;
}

void SampledFunction::validate() const {
    if (grids.empty() || grids.size() > 2)
        throw std::invalid_argument("SampledFunction: rank must be 1 or 2");
    std::size_t expect = 1;
    for (const auto& g : grids) {
        g.validate();
        expect *= g.size();
    }
    if (values.size() != expect)
        throw std::invalid_argument("SampledFunction: value shape mismatch");
}

SampledFunction sample1d(const Grid1D& g, const std::function<cplx(double)>& f) {
    SampledFunction s;
    s.grids = {g};
    s.values.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s.values[i] = f(g.nodes[i]);
    return s;
}

SampledFunction sample2d(const Grid1D& g0, const Grid1D& g1,
                         const std::function<cplx(double, double)>& f) {
    SampledFunction s;
    s.grids = {g0, g1};
    s.values.resize(g0.size() * g1.size());
    for (std::size_t i = 0; i < g0.size(); ++i)
        for (std::size_t j = 0; j < g1.size(); ++j)
            s.values[i * g1.size() + j] = f(g0.nodes[i], g1.nodes[j]);
    return s;
}

cplx integrate(const SampledFunction& f) {
    f.validate();
    cplx sum = 0.0, comp = 0.0;
    auto add = [&](cplx term) {
        cplx y = term - comp;
        cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    if (f.rank() == 1) {
        for (std::size_t i = 0; i < f.grids[0].size(); ++i)
            add(f.grids[0].weights[i] * f.values[i]);
    } else {
        const auto& g0 = f.grids[0];
        const auto& g1 = f.grids[1];
        for (std::size_t i = 0; i < g0.size(); ++i)
            for (std::size_t j = 0; j < g1.size(); ++j)
                add(g0.weights[i] * g1.weights[j] * f.values[i * g1.size() + j]);
    }
    return sum;
}

cplx l2_inner(const SampledFunction& f, const SampledFunction& g) {
    if (f.values.size() != g.values.size())
        throw std::invalid_argument("l2_inner: shape mismatch");
    SampledFunction prod = f;
    for (std::size_t i = 0; i < prod.values.size(); ++i)
        prod.values[i] = f.values[i] * std::conj(g.values[i]);
    return integrate(prod);
}

double l2_norm(const SampledFunction& f) {
    return std::sqrt(std::abs(l2_inner(f, f).real()));
}

void QuadSpec::validate() const {
    if (counts.size() != box.size())
        throw std::invalid_argument("QuadSpec: counts/box rank mismatch");
    for (std::size_t n : counts)
        if (n < 4) throw std::invalid_argument("QuadSpec: node counts must be >= 4");
    for (auto [a, b] : box) {
        if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
            throw std::invalid_argument("QuadSpec: box bounds must be finite with a < b");
    }
    if (!(refine_factor > 1.0))
        throw std::invalid_argument("QuadSpec: refinement factor must exceed 1");
}

QuadSpec QuadSpec::refined() const {
    QuadSpec r = *this;
    for (auto& n : r.counts)
        n = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * refine_factor));
    return r;
}

QuadSpec QuadSpec::enlarged(double frac) const {
    QuadSpec r = *this;
    for (auto& [a, b] : r.box) {
        double mid = 0.5 * (a + b), half = 0.5 * (b - a) * (1.0 + frac);
        a = mid - half;
        b = mid + half;
    }
    return r;
}

namespace {

// 4th-order first-derivative stencil; reads strided input, writes a
// contiguous line buffer.
void diff_line(const cplx* v, cplx* out, std::size_t n, std::size_t stride, double h) {
    auto at = [&](std::size_t i) { return v[i * stride]; };
    out[0] = (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) /
             (12.0 * h);
    out[1] = (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) /
             (12.0 * h);
    for (std::size_t i = 2; i + 2 < n; ++i)
        out[i] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
    out[n - 2] = (3.0 * at(n - 1) + 10.0 * at(n - 2) - 18.0 * at(n - 3) +
                  6.0 * at(n - 4) - at(n - 5)) /
                 (12.0 * h);
    out[n - 1] = (25.0 * at(n - 1) - 48.0 * at(n - 2) + 36.0 * at(n - 3) -
                  16.0 * at(n - 4) + 3.0 * at(n - 5)) /
                 (12.0 * h);
}

}  // namespace

DiffResult central_diff(const SampledFunction& samples, std::size_t axis,
                        std::size_t step_refinements) {
    samples.validate();
    if (axis >= samples.rank()) throw std::invalid_argument("central_diff: bad axis");
    double h = 0.0;
    if (!samples.grids[axis].is_uniform(&h))
        throw std::invalid_argument("central_diff: grid not uniform along axis");
    std::size_t n = samples.grids[axis].size();
    if (n < 5) throw std::invalid_argument("central_diff: need at least 5 nodes");

    DiffResult res;
    res.deriv = samples;

    std::size_t nlines, stride, linestep;
    if (samples.rank() == 1) {
        nlines = 1;
        stride = 1;
        linestep = 0;
    } else if (axis == 0) {
        nlines = samples.grids[1].size();
        stride = samples.grids[1].size();
        linestep = 1;
    } else {
        nlines = samples.grids[0].size();
        stride = 1;
        linestep = samples.grids[1].size();
    }

    std::vector<cplx> line(n);
    for (std::size_t l = 0; l < nlines; ++l) {
        const cplx* src = samples.values.data() + l * linestep;
        diff_line(src, line.data(), n, stride, h);
        for (std::size_t i = 0; i < n; ++i) res.deriv.values[l * linestep + i * stride] = line[i];
    }

    // Error estimate: redo the interior stencil on a coarsened subsample and
    // compare where both exist. The 4th-order ratio under h -> 2h is 16.
    double est = 0.0;
    if (step_refinements > 0 && n >= 9) {
        std::size_t m = (n + 1) / 2;
        if (m >= 5) {
            std::vector<cplx> coarse(m), dcoarse(m);
            for (std::size_t l = 0; l < nlines; ++l) {
                const cplx* src = samples.values.data() + l * linestep;
                for (std::size_t i = 0; i < m; ++i) coarse[i] = src[(2 * i) * stride];
                diff_line(coarse.data(), dcoarse.data(), m, 1, 2.0 * h);
                for (std::size_t i = 2; i + 2 < m; ++i) {
                    double d = std::abs(dcoarse[i] -
                                        res.deriv.values[l * linestep + (2 * i) * stride]);
                    est = std::max(est, d / 15.0);
                }
            }
        }
    }
    res.est_error = est;
    return res;
}

std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
    std::size_t n = nodes.size();
    std::vector<double> w(n, 1.0);
    // rescale progressively to avoid overflow for larger grids
    double scale = 4.0 / (nodes.back() - nodes.front());
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) prod *= (nodes[i] - nodes[j]) * scale;
        w[i] = 1.0 / prod;
    }
    return w;
}

cplx barycentric_eval(const std::vector<double>& nodes, const std::vector<double>& bw,
                      const std::vector<cplx>& values, double x) {
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double dx = x - nodes[i];
        if (std::abs(dx) < 1e-14) return values[i];
        double q = bw[i] / dx;
        num += q * values[i];
        den += q;
    }
    return num / den;
}

double kahan_sum(const std::vector<double>& terms) {
    double sum = 0.0, comp = 0.0;
    for (double t : terms) {
        double y = t - comp;
        double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    return sum;
}

std::vector<double> jacobi_eigenvalues(std::vector<double> m, std::size_t n) {
    if (m.size() != n * n) throw std::invalid_argument("jacobi_eigenvalues: shape");
    auto at = [&](std::size_t i, std::size_t j) -> double& { return m[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace glharm::numerics
