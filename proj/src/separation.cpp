#include "glharm/separation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace glharm::separation {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// FFT and Hardy masks
// ---------------------------------------------------------------------------

void fft_inplace(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_inplace: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

SampledFunction edge_taper(const SampledFunction& f, double frac) {
    f.validate();
    SampledFunction out = f;
    auto taper1 = [&](const Grid1D& g, std::size_t i) {
        double a = g.nodes.front(), b = g.nodes.back();
        double w = (b - a) * frac;
        double x = g.nodes[i];
        double d = std::min(x - a, b - x);
        if (d >= w) return 1.0;
        return 0.5 * (1.0 - std::cos(pi * d / w));
    };
    if (f.rank() == 1) {
        for (std::size_t i = 0; i < f.grids[0].size(); ++i)
            out.values[i] *= taper1(f.grids[0], i);
    } else {
        for (std::size_t i = 0; i < f.grids[0].size(); ++i)
            for (std::size_t j = 0; j < f.grids[1].size(); ++j)
                out.at(i, j) *= taper1(f.grids[0], i) * taper1(f.grids[1], j);
    }
    return out;
}

namespace {

// in place, one line; n power of two
void mask_line(std::vector<cplx>& line, HardySign sign, double* high_energy,
               double* total_energy) {
    const std::size_t n = line.size();
    fft_inplace(line, false);
    if (high_energy && total_energy) {
        for (std::size_t k = 0; k < n; ++k) {
            // signed frequency index
            double kf = (k <= n / 2) ? static_cast<double>(k)
                                     : static_cast<double>(k) - static_cast<double>(n);
            double e = std::norm(line[k]);
            *total_energy += e;
            if (std::abs(kf) > 0.45 * static_cast<double>(n)) *high_energy += e;
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        bool positive = (k >= 1 && k < n / 2);
        bool negative = (k > n / 2);
        double w;
        if (k == 0 || k == n / 2)
            w = 0.5;
        else if (sign == HardySign::plus)
            w = positive ? 1.0 : 0.0;
        else
            w = negative ? 1.0 : 0.0;
        line[k] *= w;
    }
    fft_inplace(line, true);
}

void require_uniform_pow2(const Grid1D& g) {
    if (!g.is_uniform())
        throw std::invalid_argument("hardy_project: grid must be uniform");
    std::size_t n = g.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("hardy_project: size must be a power of two");
}

}  // namespace

SampledFunction hardy_project(const SampledFunction& f, HardySign sign,
                              BandReport* band) {
    f.validate();
    if (f.rank() != 1)
        throw std::invalid_argument("hardy_project: 1D sample expected");
    require_uniform_pow2(f.grids[0]);
    SampledFunction out = f;
    double high = 0.0, tot = 0.0;
    std::vector<cplx> line = f.values;
    mask_line(line, sign, &high, &tot);
    out.values = std::move(line);
    if (band) {
        band->high_band_fraction = tot > 0.0 ? high / tot : 0.0;
        band->ok = band->high_band_fraction < 1e-8;
    }
    return out;
}

SampledFunction block_project(const SampledFunction& f, HardyComponent comp,
                              BandReport* band) {
    f.validate();
    if (f.rank() != 2)
        throw std::invalid_argument("block_project: 2D sample expected");
    require_uniform_pow2(f.grids[0]);
    require_uniform_pow2(f.grids[1]);
    const std::size_t n0 = f.grids[0].size(), n1 = f.grids[1].size();
    SampledFunction out = f;
    double high = 0.0, tot = 0.0;
    // axis 0 (columns)
    std::vector<cplx> line(n0);
    for (std::size_t j = 0; j < n1; ++j) {
        for (std::size_t i = 0; i < n0; ++i) line[i] = out.at(i, j);
        mask_line(line, comp.s1, &high, &tot);
        for (std::size_t i = 0; i < n0; ++i) out.at(i, j) = line[i];
    }
    // axis 1 (rows)
    std::vector<cplx> row(n1);
    for (std::size_t i = 0; i < n0; ++i) {
        for (std::size_t j = 0; j < n1; ++j) row[j] = out.at(i, j);
        mask_line(row, comp.s2, nullptr, nullptr);
        for (std::size_t j = 0; j < n1; ++j) out.at(i, j) = row[j];
    }
    if (band) {
        band->high_band_fraction = tot > 0.0 ? high / tot : 0.0;
        band->ok = band->high_band_fraction < 1e-8;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Line actions and the hyperboloid chart
// ---------------------------------------------------------------------------

namespace {

// local 6-point Lagrange interpolation on a uniform grid; zero outside
cplx interp_uniform(const Grid1D& g, const std::vector<cplx>& v, double x,
                    std::size_t stride, std::size_t base) {
    const std::size_t n = g.size();
    const double a = g.nodes.front(), h = g.nodes[1] - g.nodes[0];
    double u = (x - a) / h;
    if (u < -0.5 || u > static_cast<double>(n - 1) + 0.5) return 0.0;
    long ctr = std::lround(u);
    long lo = ctr - 2;
    if (lo < 0) lo = 0;
    if (lo + 5 >= static_cast<long>(n)) lo = static_cast<long>(n) - 6;
    cplx acc(0.0);
    for (long m = lo; m < lo + 6; ++m) {
        double lk = 1.0;
        for (long j = lo; j < lo + 6; ++j)
            if (j != m) lk *= (u - static_cast<double>(j)) / static_cast<double>(m - j);
        acc += lk * v[base + static_cast<std::size_t>(m) * stride];
    }
    return acc;
}

}  // namespace

SampledFunction sl2_T_action(const GroupElement& g, const SampledFunction& f) {
    f.validate();
    if (f.rank() != 1)
        throw std::invalid_argument("sl2_T_action: 1D sample expected");
    const Grid1D& grid = f.grids[0];
    if (!grid.is_uniform())
        throw std::invalid_argument("sl2_T_action: uniform grid expected");
    SampledFunction out = f;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid.nodes[i];
        double den = g.a + x * g.c;
        if (std::abs(den) < 1e-9 * (1.0 + std::abs(x))) {
            // decaying f: the mapped argument runs off to infinity
            out.values[i] = 0.0;
            continue;
        }
        double y = (g.b + x * g.d) / den;
        out.values[i] = interp_uniform(grid, f.values, y, 1, 0) / den;
    }
    return out;
}

double hyperboloid_weight(double x1, double x2) {
    if (x1 == x2) throw std::domain_error("hyperboloid_weight: diagonal rejected");
    double d = x1 - x2;
    return 1.0 / (d * d);
}

namespace {
void require_offdiag(const SampledFunction& f) {
    if (f.rank() != 2) throw std::invalid_argument("J_map: 2D sample expected");
    for (double x1 : f.grids[0].nodes)
        for (double x2 : f.grids[1].nodes)
            if (x1 == x2)
                throw std::invalid_argument("J_map: grid touches the diagonal");
}
}  // namespace

SampledFunction J_map(const SampledFunction& f) {
    f.validate();
    require_offdiag(f);
    SampledFunction out = f;
    for (std::size_t i = 0; i < f.grids[0].size(); ++i)
        for (std::size_t j = 0; j < f.grids[1].size(); ++j)
            out.at(i, j) = f.at(i, j) / (f.grids[0].nodes[i] - f.grids[1].nodes[j]);
    return out;
}

SampledFunction J_map_inverse(const SampledFunction& f) {
    f.validate();
    require_offdiag(f);
    SampledFunction out = f;
    for (std::size_t i = 0; i < f.grids[0].size(); ++i)
        for (std::size_t j = 0; j < f.grids[1].size(); ++j)
            out.at(i, j) = f.at(i, j) * (f.grids[0].nodes[i] - f.grids[1].nodes[j]);
    return out;
}

SampledFunction Q_action(const GroupElement& g, const SampledFunction& f) {
    f.validate();
    if (f.rank() != 2) throw std::invalid_argument("Q_action: 2D sample expected");
    const Grid1D& g0 = f.grids[0];
    const Grid1D& g1 = f.grids[1];
    if (!g0.is_uniform() || !g1.is_uniform())
        throw std::invalid_argument("Q_action: uniform grids expected");
    SampledFunction out = f;
    const std::size_t n1 = g1.size();
    std::vector<cplx> column(6);
    for (std::size_t i = 0; i < g0.size(); ++i) {
        double x1 = g0.nodes[i];
        double den1 = g.a + x1 * g.c;
        for (std::size_t j = 0; j < n1; ++j) {
            double x2 = g1.nodes[j];
            double den2 = g.a + x2 * g.c;
            if (std::abs(den1) < 1e-9 || std::abs(den2) < 1e-9) {
                out.at(i, j) = 0.0;
                continue;
            }
            double y1 = (g.b + x1 * g.d) / den1;
            double y2 = (g.b + x2 * g.d) / den2;
            // tensor 6x6 local Lagrange: interpolate along axis 1 at six
            // bracketing axis-0 rows, then along axis 0
            const double a0 = g0.nodes.front(), h0 = g0.nodes[1] - g0.nodes[0];
            double u = (y1 - a0) / h0;
            if (u < -0.5 || u > static_cast<double>(g0.size() - 1) + 0.5) {
                out.at(i, j) = 0.0;
                continue;
            }
            long lo = std::lround(u) - 2;
            if (lo < 0) lo = 0;
            if (lo + 5 >= static_cast<long>(g0.size()))
                lo = static_cast<long>(g0.size()) - 6;
            cplx acc(0.0);
            for (long m = lo; m < lo + 6; ++m) {
                double lk = 1.0;
                for (long k = lo; k < lo + 6; ++k)
                    if (k != m)
                        lk *= (u - static_cast<double>(k)) / static_cast<double>(m - k);
                cplx rowval = interp_uniform(
                    g1, f.values, y2, 1, static_cast<std::size_t>(m) * n1);
                acc += lk * rowval;
            }
            out.at(i, j) = acc / (den1 * den2);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lorentz group and spheres
// ---------------------------------------------------------------------------

LorentzElement::LorentzElement(int q, std::vector<double> rowmajor)
    : q_(q), m_(std::move(rowmajor)) {
    if (q_ < 2) throw std::invalid_argument("LorentzElement: q >= 2 required");
    if (m_.size() != static_cast<std::size_t>((q_ + 1) * (q_ + 1)))
        throw std::invalid_argument("LorentzElement: wrong matrix size");
    validate();
}

void LorentzElement::validate() const {
    const int n = q_ + 1;
    // g eta g^T = eta with eta = diag(-1, 1, ..., 1)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                double sgn = (k == 0) ? -1.0 : 1.0;
                s += at(i, k) * sgn * at(j, k);
            }
            double want = (i == j) ? (i == 0 ? -1.0 : 1.0) : 0.0;
            if (std::abs(s - want) > 1e-12)
                throw std::invalid_argument("LorentzElement: form not preserved");
        }
    if (!(at(0, 0) > 0.0))
        throw std::invalid_argument("LorentzElement: not in the connected component");
    // det = +1 via Gaussian elimination
    std::vector<double> lu = m_;
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(lu[r * n + col]) > std::abs(lu[piv * n + col])) piv = r;
        if (piv != col) {
            for (int k = 0; k < n; ++k) std::swap(lu[col * n + k], lu[piv * n + k]);
            det = -det;
        }
        det *= lu[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            double f = lu[r * n + col] / lu[col * n + col];
            for (int k = col; k < n; ++k) lu[r * n + k] -= f * lu[col * n + k];
        }
    }
    if (std::abs(det - 1.0) > 1e-10)
        throw std::invalid_argument("LorentzElement: det != +1");
}

LorentzElement LorentzElement::identity(int q) {
    std::vector<double> m((q + 1) * (q + 1), 0.0);
    for (int i = 0; i <= q; ++i) m[i * (q + 1) + i] = 1.0;
    return LorentzElement(q, std::move(m));
}

LorentzElement LorentzElement::boost(int q, int axis, double rapidity) {
    if (axis < 1 || axis > q) throw std::invalid_argument("boost: axis out of range");
    std::vector<double> m((q + 1) * (q + 1), 0.0);
    for (int i = 0; i <= q; ++i) m[i * (q + 1) + i] = 1.0;
    double ch = std::cosh(rapidity), sh = std::sinh(rapidity);
    m[0] = ch;
    m[axis] = sh;
    m[axis * (q + 1)] = sh;
    m[axis * (q + 1) + axis] = ch;
    return LorentzElement(q, std::move(m));
}

LorentzElement LorentzElement::spatial_rotation(int q, int i, int j, double angle) {
    if (i < 1 || j < 1 || i > q || j > q || i == j)
        throw std::invalid_argument("spatial_rotation: bad axes");
    std::vector<double> m((q + 1) * (q + 1), 0.0);
    for (int k = 0; k <= q; ++k) m[k * (q + 1) + k] = 1.0;
    double c = std::cos(angle), s = std::sin(angle);
    m[i * (q + 1) + i] = c;
    m[j * (q + 1) + j] = c;
    m[i * (q + 1) + j] = -s;
    m[j * (q + 1) + i] = s;
    return LorentzElement(q, std::move(m));
}

LorentzElement LorentzElement::operator*(const LorentzElement& o) const {
    if (q_ != o.q_) throw std::invalid_argument("LorentzElement: rank mismatch");
    const int n = q_ + 1;
    std::vector<double> m(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += at(i, k) * o.at(k, j);
            m[i * n + j] = s;
        }
    return LorentzElement(q_, std::move(m));
}

std::pair<Vec3, double> lorentz_sphere_action(const LorentzElement& g, const Vec3& x,
                                              int q) {
    const int n = q + 1;
    double out[4] = {0, 0, 0, 0};
    for (int m = 0; m < n; ++m) {
        double s = g.at(0, m);
        for (int k = 1; k < n; ++k) s += x[k - 1] * g.at(k, m);
        out[m] = s;
    }
    if (!(out[0] > 0.0))
        throw std::domain_error("lorentz_sphere_action: a + x c <= 0");
    Vec3 y{0.0, 0.0, 0.0};
    for (int k = 1; k < n; ++k) y[k - 1] = out[k] / out[0];
    return {y, 1.0 / out[0]};
}

SphereGrid SphereGrid::make(int q, std::size_t n0, std::size_t n1, double offset) {
    SphereGrid g;
    g.q = q;
    if (q == 2) {
        g.n0 = n0;
        g.n1 = 1;
        double h = 2.0 * pi / static_cast<double>(n0);
        for (std::size_t i = 0; i < n0; ++i) {
            double th = h * (static_cast<double>(i) + 0.5 + offset);
            g.points.push_back({std::cos(th), std::sin(th), 0.0});
            g.weights.push_back(h);
            g.coord0.push_back(th);
        }
    } else if (q == 3) {
        if (n1 == 0) n1 = 2 * n0;
        g.n0 = n0;
        g.n1 = n1;
        Grid1D ug = numerics::gauss_legendre(n0, -1.0, 1.0);
        double h = 2.0 * pi / static_cast<double>(n1);
        g.coord0 = ug.nodes;
        for (std::size_t j = 0; j < n1; ++j)
            g.coord1.push_back(h * (static_cast<double>(j) + 0.5 + offset));
        for (std::size_t i = 0; i < n0; ++i) {
            double u = ug.nodes[i];
            double r = std::sqrt(std::max(0.0, 1.0 - u * u));
            for (std::size_t j = 0; j < n1; ++j) {
                double ph = g.coord1[j];
                g.points.push_back({r * std::cos(ph), r * std::sin(ph), u});
                g.weights.push_back(ug.weights[i] * h);
            }
        }
    } else {
        throw std::invalid_argument("SphereGrid: q must be 2 or 3");
    }
    return g;
}

double SphereGrid::area() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

SphereFunction sample_sphere(const SphereGrid& g,
                             const std::function<cplx(const Vec3&)>& f) {
    SphereFunction out;
    out.grid = g;
    out.values.reserve(g.size());
    for (const auto& p : g.points) out.values.push_back(f(p));
    return out;
}

void ComplementaryParams::validate() const {
    if (q != 2 && q != 3) throw std::invalid_argument("ComplementaryParams: q in {2,3}");
    if (!principal) {
        if (!(s > 0.0) || !(s < 0.5 * (q - 1)))
            throw std::invalid_argument(
                "ComplementaryParams: need 0 < s < (q-1)/2 for the complementary "
                "series");
    }
}

double ComplementaryParams::gram_exponent() const {
    if (convention == KernelConvention::sobolev) return (q - 1.0) - 2.0 * s;
    return 0.5 * (q - 1.0) - s;
}

double ComplementaryParams::equator_exponent() const {
    if (convention == KernelConvention::sobolev) return (q - 1.0) - 2.0 * s;
    return -0.5 * (q - 1.0) + s;
}

namespace {

// interpolation in the grid's native coordinates
cplx sphere_interp(const SphereFunction& f, const Vec3& y) {
    const SphereGrid& g = f.grid;
    if (g.q == 2) {
        double th = std::atan2(y[1], y[0]);
        double h = 2.0 * pi / static_cast<double>(g.n0);
        double u = (th - g.coord0[0]) / h;
        // periodic 6-point Lagrange
        double ur = u - std::floor(u / static_cast<double>(g.n0)) *
                            static_cast<double>(g.n0);
        long base = static_cast<long>(std::lround(ur)) - 2;
        cplx acc(0.0);
        for (long m = base; m < base + 6; ++m) {
            double lk = 1.0;
            for (long k = base; k < base + 6; ++k)
                if (k != m)
                    lk *= (ur - static_cast<double>(k)) / static_cast<double>(m - k);
            long idx = ((m % static_cast<long>(g.n0)) + static_cast<long>(g.n0)) %
                       static_cast<long>(g.n0);
            acc += lk * f.values[static_cast<std::size_t>(idx)];
        }
        return acc;
    }
    // q = 3: tensor of 4-point Lagrange in u and periodic 6-point in phi
    double u = y[2];
    double ph = std::atan2(y[1], y[0]);
    const auto& un = g.coord0;
    std::size_t iu = 0;
    while (iu + 1 < un.size() && un[iu + 1] < u) ++iu;
    long lo = static_cast<long>(iu) - 1;
    if (lo < 0) lo = 0;
    if (lo + 3 >= static_cast<long>(un.size())) lo = static_cast<long>(un.size()) - 4;
    double hp = 2.0 * pi / static_cast<double>(g.n1);
    double v = (ph - g.coord1[0]) / hp;
    double vr = v - std::floor(v / static_cast<double>(g.n1)) *
                        static_cast<double>(g.n1);
    long pbase = static_cast<long>(std::lround(vr)) - 2;
    cplx acc(0.0);
    for (long m = lo; m < lo + 4; ++m) {
        double lu = 1.0;
        for (long k = lo; k < lo + 4; ++k)
            if (k != m) lu *= (u - un[k]) / (un[m] - un[k]);
        cplx row(0.0);
        for (long mm = pbase; mm < pbase + 6; ++mm) {
            double lp = 1.0;
            for (long kk = pbase; kk < pbase + 6; ++kk)
                if (kk != mm)
                    lp *= (vr - static_cast<double>(kk)) /
                          static_cast<double>(mm - kk);
            long idx = ((mm % static_cast<long>(g.n1)) + static_cast<long>(g.n1)) %
                       static_cast<long>(g.n1);
            row += lp * f.values[static_cast<std::size_t>(m) * g.n1 +
                                 static_cast<std::size_t>(idx)];
        }
        acc += lu * row;
    }
    return acc;
}

cplx lambda_of(const ComplementaryParams& p, int lambda_sign) {
    if (p.principal) return cplx(0.0, p.sigma);
    return cplx(lambda_sign * p.s, 0.0);
}

}  // namespace

SphereFunction comp_action(const ComplementaryParams& p, const LorentzElement& g,
                           const SphereFunction& f, int lambda_sign) {
    p.validate();
    if (g.q() != p.q) throw std::invalid_argument("comp_action: rank mismatch");
    cplx lam = lambda_of(p, lambda_sign);
    cplx expo = lam - 0.5 * (p.q - 1.0);
    SphereFunction out;
    out.grid = f.grid;
    out.values.resize(f.grid.size());
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
        auto [y, dil] = lorentz_sphere_action(g, f.grid.points[i], p.q);
        // (a + x c)^{-(q-1)/2 + lambda}; dil = (a + x c)^{-1} > 0
        cplx cocycle = std::exp(-expo * std::log(dil));
        out.values[i] = cocycle * sphere_interp(f, y);
    }
    return out;
}

std::pair<SphereGrid, SphereGrid> gram_grids(int q, int level) {
    if (q == 2) {
        std::size_t n = 96u << level;
        return {SphereGrid::make(2, n, 0, 0.0), SphereGrid::make(2, n, 0, 0.5)};
    }
    std::size_t n0 = 20u << level, n1 = 40u << level;
    return {SphereGrid::make(3, n0, n1, 0.0),
            SphereGrid::make(3, n0 + 1, n1, 0.5)};
}

cplx comp_gram_sampled(const ComplementaryParams& p, const SphereFunction& f1,
                       const SphereFunction& f2) {
    p.validate();
    const double e = p.gram_exponent();
    cplx sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < f1.grid.size(); ++i) {
        const Vec3& x1 = f1.grid.points[i];
        const cplx v1 = f1.values[i] * f1.grid.weights[i];
        if (v1 == cplx(0.0)) continue;
        for (std::size_t j = 0; j < f2.grid.size(); ++j) {
            const Vec3& x2 = f2.grid.points[j];
            double dx = x1[0] - x2[0], dy = x1[1] - x2[1], dz = x1[2] - x2[2];
            double dist2 = dx * dx + dy * dy + dz * dz;
            cplx term = v1 * std::conj(f2.values[j]) * f2.grid.weights[j] *
                        std::pow(dist2, -0.5 * e);
            cplx y = term - comp;
            cplx t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
    }
    return sum;
}

cplx comp_gram(const ComplementaryParams& p,
               const std::function<cplx(const Vec3&)>& f1,
               const std::function<cplx(const Vec3&)>& f2, int level) {
    auto [ga, gb] = gram_grids(p.q, level);
    SphereFunction s1 = sample_sphere(ga, f1);
    SphereFunction s2 = sample_sphere(gb, f2);
    return comp_gram_sampled(p, s1, s2);
}

EquatorGramResult equator_delta_gram(const ComplementaryParams& p,
                                     const std::function<cplx(const Vec3&)>& phi1,
                                     const std::function<cplx(const Vec3&)>& phi2,
                                     int deriv_order, int levels,
                                     std::size_t base_nodes) {
    p.validate();
    EquatorGramResult res;
    const double e = p.equator_exponent() + (deriv_order == 1 ? 2.0 : 0.0);
    const double hoff = 0.03;  // polar offset for the normal-derivative pairing

    if (p.q == 2) {
        // the equator of S^1 is the two points (+-1, 0); exact finite sum
        const Vec3 pts[2] = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
        cplx sum = 0.0;
        bool infinite = false;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double dist = (i == j) ? 0.0 : 2.0;
                double kv;
                if (dist == 0.0) {
                    if (e > 0.0) {
                        infinite = true;
                        kv = 0.0;
                    } else if (e == 0.0)
                        kv = 1.0;
                    else
                        kv = 0.0;
                } else
                    kv = std::pow(dist, -e);
                sum += phi1(pts[i]) * std::conj(phi2(pts[j])) * kv;
            }
        res.value = sum;
        res.diverged = infinite;
        res.refinements = {sum.real()};
        return res;
    }

    // q = 3: equator is a circle; offset product rules, doubling node counts
    auto eval = [&](std::size_t m) -> cplx {
        double h = 2.0 * pi / static_cast<double>(m);
        cplx sum = 0.0, comp = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double a1 = h * (static_cast<double>(i) + 0.5);
            for (std::size_t j = 0; j < m; ++j) {
                double a2 = h * (static_cast<double>(j) + 1.0);
                cplx term;
                if (deriv_order == 0) {
                    Vec3 y1{std::cos(a1), std::sin(a1), 0.0};
                    Vec3 y2{std::cos(a2), std::sin(a2), 0.0};
                    double dx = y1[0] - y2[0], dy = y1[1] - y2[1];
                    double dist2 = dx * dx + dy * dy;
                    term = phi1(y1) * std::conj(phi2(y2)) * std::pow(dist2, -0.5 * e) *
                           h * h;
                } else {
                    // second-order normal difference of the ambient kernel
                    double cp = std::cos(hoff), sp = std::sin(hoff);
                    double acc = 0.0;
                    for (int s1 = -1; s1 <= 1; s1 += 2)
                        for (int s2 = -1; s2 <= 1; s2 += 2) {
                            Vec3 y1{cp * std::cos(a1), cp * std::sin(a1), s1 * sp};
                            Vec3 y2{cp * std::cos(a2), cp * std::sin(a2), s2 * sp};
                            double dx = y1[0] - y2[0], dy = y1[1] - y2[1],
                                   dz = y1[2] - y2[2];
                            double dist2 = dx * dx + dy * dy + dz * dz;
                            acc += s1 * s2 *
                                   std::pow(dist2, -0.5 * p.equator_exponent());
                        }
                    acc /= (4.0 * sp * sp);
                    Vec3 y1{std::cos(a1), std::sin(a1), 0.0};
                    Vec3 y2{std::cos(a2), std::sin(a2), 0.0};
                    term = phi1(y1) * std::conj(phi2(y2)) * acc * h * h;
                }
                cplx y = term - comp;
                cplx t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
        }
        return sum;
    };

    std::size_t m = base_nodes;
    for (int l = 0; l < levels; ++l, m *= 2)
        res.refinements.push_back(eval(m).real());
    res.value = res.refinements.back();

    if (res.refinements.size() >= 3) {
        std::vector<double> deltas;
        for (std::size_t k = 1; k < res.refinements.size(); ++k)
            deltas.push_back(std::abs(res.refinements[k] - res.refinements[k - 1]));
        double r = 0.0;
        int cnt = 0;
        for (std::size_t k = 1; k < deltas.size(); ++k)
            if (deltas[k - 1] > 0.0) {
                r += deltas[k] / deltas[k - 1];
                ++cnt;
            }
        res.growth = cnt ? r / cnt : 0.0;
        res.diverged = res.growth > 1.0;
    }
    return res;
}

double j_exponent(const ComplementaryParams& p, JExponent mode) {
    switch (mode) {
        case JExponent::verbatim: return 0.5 * (p.q - 1.0) - p.s;
        case JExponent::intertwine_minus_s: return -p.s;
        case JExponent::intertwine_plus_s: return p.s;
    }
    return 0.0;
}

SphereFunction restriction_J(const ComplementaryParams& p, const SphereFunction& f,
                             JExponent mode) {
    p.validate();
    const double e = j_exponent(p, mode);
    SphereFunction out = f;
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
        double xq = (p.q == 2) ? f.grid.points[i][1] : f.grid.points[i][2];
        if (xq == 0.0)
            throw std::domain_error("restriction_J: node on the equator");
        out.values[i] = f.values[i] * std::pow(std::abs(xq), e);
    }
    return out;
}

}  // namespace glharm::separation
