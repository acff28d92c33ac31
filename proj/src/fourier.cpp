#include "glharm/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "glharm/parallel.hpp"

namespace glharm::fourier {

using specfun::signed_power;
using specfun::SignedExponent;
using std::numbers::pi;

namespace {

// |x|^(re + i im) sgn(x)^eps without the generic complex-pow overhead
inline cplx spow(double x, double re, double im, int eps) {
    double l = std::log(std::abs(x));
    double mag = std::exp(re * l);
    double ph = im * l;
    cplx r(mag * std::cos(ph), mag * std::sin(ph));
    if (x < 0.0 && (eps & 1)) r = -r;
    return r;
}

inline cplx ipow(cplx z, unsigned n) {
    cplx r(1.0, 0.0);
    while (n) {
        if (n & 1) r *= z;
        z *= z;
        n >>= 1;
    }
    return r;
}

struct KahanC {
    cplx sum{0.0, 0.0}, comp{0.0, 0.0};
    inline void add(cplx term) {
        cplx y = term - comp;
        cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

std::string PrincipalSeriesPoint::str() const {
    std::ostringstream os;
    os << "(" << mu1.real() << (mu1.imag() >= 0 ? "+" : "") << mu1.imag() << "i//"
       << eps1 << ";" << mu2.real() << (mu2.imag() >= 0 ? "+" : "") << mu2.imag()
       << "i//" << eps2 << ")";
    return os.str();
}

void KernelMatrix::validate() const {
    tgrid.validate();
    sgrid.validate();
    if (values.size() != tgrid.size() * sgrid.size())
        throw std::invalid_argument("KernelMatrix: shape mismatch");
    for (const cplx& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("KernelMatrix: non-finite entry");
}

FiberQuad FiberQuad::refined(double factor) const {
    FiberQuad r = *this;
    auto up = [&](std::size_t n) {
        return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * factor));
    };
    r.na = up(na);
    r.nc = up(nc);
    r.nd = up(nd);
    r.nodes_per_unit = nodes_per_unit * factor;
    return r;
}

std::string FiberQuad::str() const {
    std::ostringstream os;
    os << "fiber[" << na << "x" << nc << "x" << nd << ",npu=" << nodes_per_unit << "]";
    return os.str();
}

namespace {

struct SupportData {
    double alo, ahi, blo, bhi, clo, chi, dlo, dhi;
    double margin;
    double Ra, Rb, Rc, Rd;  // max abs per coordinate
};

SupportData support_data(const TestFunction& f) {
    const auto& b = f.support();
    SupportData s{};
    s.alo = b.lo[0];
    s.ahi = b.hi[0];
    s.blo = b.lo[1];
    s.bhi = b.hi[1];
    s.clo = b.lo[2];
    s.chi = b.hi[2];
    s.dlo = b.lo[3];
    s.dhi = b.hi[3];
    s.margin = f.det_margin();
    s.Ra = std::max(std::abs(s.alo), std::abs(s.ahi));
    s.Rb = std::max(std::abs(s.blo), std::abs(s.bhi));
    s.Rc = std::max(std::abs(s.clo), std::abs(s.chi));
    s.Rd = std::max(std::abs(s.dlo), std::abs(s.dhi));
    return s;
}

bool chart_is_safe(const SupportData& s, const Grid1D& tgrid) {
    double tmin = tgrid.nodes.front(), tmax = tgrid.nodes.back();
    double amin = 1e300, amax = -1e300;
    for (double a : {s.alo, s.ahi})
        for (double c : {s.clo, s.chi})
            for (double t : {tmin, tmax}) {
                amin = std::min(amin, a + t * c);
                amax = std::max(amax, a + t * c);
            }
    return amin > 1e-3 || amax < -1e-3;
}

// Tensor-product fiber integration, valid when a+tc keeps one sign.
void kernel_tensor(const TestFunction& f, const PrincipalSeriesPoint& p,
                   const FiberQuad& quad, KernelDeriv mode, KernelMatrix& out,
                   unsigned threads) {
    const SupportData sd = support_data(f);
    const auto ga = numerics::gauss_legendre(quad.na, sd.alo, sd.ahi);
    const auto gc = numerics::gauss_legendre(quad.nc, sd.clo, sd.chi);
    const auto gd = numerics::gauss_legendre(quad.nd, sd.dlo, sd.dhi);
    const auto& tg = out.tgrid.nodes;
    const auto& sg = out.sgrid.nodes;
    const std::size_t nt = tg.size(), ns = sg.size();

    const double r1re = -1.5 + p.mu1.real(), r1im = p.mu1.imag();
    const double r2re = -1.5 + p.mu2.real(), r2im = p.mu2.imag();
    const cplx rho1 = cplx(r1re, r1im), rho2 = cplx(r2re, r2im);

    // pow tables: P1[(ia*nc+ic)*nt+it], P2[(ic*nd+id)*ns+is]
    std::vector<cplx> P1(quad.na * quad.nc * nt), P1m, P2(quad.nc * quad.nd * ns), P2m;
    std::vector<double> Aarr(quad.na * quad.nc * nt), Darr(quad.nc * quad.nd * ns);
    const bool want_dt = mode == KernelDeriv::dt;
    const bool want_ds = mode == KernelDeriv::ds;
    if (want_dt) P1m.resize(P1.size());
    if (want_ds) P2m.resize(P2.size());
    for (std::size_t ia = 0; ia < quad.na; ++ia)
        for (std::size_t ic = 0; ic < quad.nc; ++ic)
            for (std::size_t it = 0; it < nt; ++it) {
                double A = ga.nodes[ia] + tg[it] * gc.nodes[ic];
                std::size_t idx = (ia * quad.nc + ic) * nt + it;
                Aarr[idx] = A;
                P1[idx] = spow(A, r1re, r1im, p.eps1);
                if (want_dt) P1m[idx] = spow(A, r1re - 1.0, r1im, p.eps1 + 1);
            }
    for (std::size_t ic = 0; ic < quad.nc; ++ic)
        for (std::size_t id = 0; id < quad.nd; ++id)
            for (std::size_t is = 0; is < ns; ++is) {
                double D = gd.nodes[id] - gc.nodes[ic] * sg[is];
                std::size_t idx = (ic * quad.nd + id) * ns + is;
                Darr[idx] = D;
                if (D == 0.0) {
                    P2[idx] = 0.0;  // F vanishes there (det margin)
                    if (want_ds) P2m[idx] = 0.0;
                    continue;
                }
                P2[idx] = spow(D, r2re, r2im, p.eps2);
                if (want_ds) P2m[idx] = spow(D, r2re - 1.0, r2im, p.eps2 + 1);
            }

    parallel_for(
        nt,
        [&](std::size_t it) {
            const double t = tg[it];
            std::vector<KahanC> row(ns);
            for (std::size_t ia = 0; ia < quad.na; ++ia) {
                const double a = ga.nodes[ia];
                for (std::size_t ic = 0; ic < quad.nc; ++ic) {
                    const double c = gc.nodes[ic];
                    const double wac = ga.weights[ia] * gc.weights[ic];
                    const std::size_t i1 = (ia * quad.nc + ic) * nt + it;
                    const double A = Aarr[i1];
                    const cplx p1 = P1[i1];
                    const cplx p1m = want_dt ? P1m[i1] : cplx(0.0);
                    for (std::size_t id = 0; id < quad.nd; ++id) {
                        const double d = gd.nodes[id];
                        const double w3 = wac * gd.weights[id];
                        const std::size_t i2 = (ic * quad.nd + id) * ns;
                        for (std::size_t is = 0; is < ns; ++is) {
                            const double s = sg[is];
                            const double bstar = s * A - t * d;
                            gl2::GroupElement g{a, bstar, c, d};
                            if (mode == KernelDeriv::value) {
                                double fv = f.value(g);
                                if (fv == 0.0) continue;
                                row[is].add(w3 * fv * p1 * P2[i2 + is]);
                            } else if (want_dt) {
                                double fv = f.value(g);
                                double fb = f.grad(g).db;
                                if (fv == 0.0 && fb == 0.0) continue;
                                cplx term = fb * (s * c - d) * p1 * P2[i2 + is] +
                                            fv * rho1 * c * p1m * P2[i2 + is];
                                row[is].add(w3 * term);
                            } else {
                                double fv = f.value(g);
                                double fb = f.grad(g).db;
                                if (fv == 0.0 && fb == 0.0) continue;
                                cplx term = fb * A * p1 * P2[i2 + is] -
                                            fv * rho2 * c * p1 * P2m[i2 + is];
                                row[is].add(w3 * term);
                            }
                        }
                    }
                }
            }
            for (std::size_t is = 0; is < ns; ++is) out.at(it, is) = row[is].sum;
        },
        threads);
    (void)rho2;
    (void)rho1;
}

// General path: per (t,s,c,d) the a-integral runs over the exact
// sub-intervals allowed by the support box, the b* window and the det
// margin, with log-graded panels against the |A|^{i Im mu1} oscillation.
void kernel_intervals(const TestFunction& f, const PrincipalSeriesPoint& p,
                      const FiberQuad& quad, KernelDeriv mode, KernelMatrix& out,
                      unsigned threads) {
    const SupportData sd = support_data(f);
    const auto gc = numerics::gauss_legendre(quad.nc, sd.clo, sd.chi);
    const auto gd = numerics::gauss_legendre(quad.nd, sd.dlo, sd.dhi);
    const auto& tg = out.tgrid.nodes;
    const auto& sg = out.sgrid.nodes;
    const std::size_t nt = tg.size(), ns = sg.size();
    const double r1re = -1.5 + p.mu1.real(), r1im = p.mu1.imag();
    const double r2re = -1.5 + p.mu2.real(), r2im = p.mu2.imag();
    const cplx rho1(r1re, r1im), rho2(r2re, r2im);
    const double rate = std::max(1.0, std::abs(r1im));
    const auto unit = numerics::gauss_legendre(std::max<std::size_t>(12, quad.na), 0.0, 1.0);
    const bool want_dt = mode == KernelDeriv::dt;
    const bool want_ds = mode == KernelDeriv::ds;

    parallel_for(
        nt,
        [&](std::size_t it) {
            const double t = tg[it];
            std::vector<KahanC> row(ns);
            for (std::size_t is = 0; is < ns; ++is) {
                const double s = sg[is];
                for (std::size_t ic = 0; ic < quad.nc; ++ic) {
                    const double c = gc.nodes[ic];
                    for (std::size_t id = 0; id < quad.nd; ++id) {
                        const double d = gd.nodes[id];
                        const double wcd = gc.weights[ic] * gd.weights[id];
                        const double D = d - c * s;
                        if (D == 0.0) continue;
                        const cplx p2 = spow(D, r2re, r2im, p.eps2);
                        const cplx p2m =
                            want_ds ? spow(D, r2re - 1.0, r2im, p.eps2 + 1) : cplx(0.0);
                        // A-window from the support box
                        double Alo = sd.alo + t * c, Ahi = sd.ahi + t * c;
                        if (Alo > Ahi) std::swap(Alo, Ahi);
                        // b* window
                        if (std::abs(s) > 1e-13) {
                            double w1 = (sd.blo + t * d) / s, w2 = (sd.bhi + t * d) / s;
                            if (w1 > w2) std::swap(w1, w2);
                            Alo = std::max(Alo, w1);
                            Ahi = std::min(Ahi, w2);
                        } else {
                            double bs = -t * d;
                            if (bs < sd.blo || bs > sd.bhi) continue;
                        }
                        if (Alo >= Ahi) continue;
                        const double cut = sd.margin / std::abs(D);
                        // up to two sign-definite pieces outside (-cut, cut)
                        const double pieces[2][2] = {{Alo, std::min(Ahi, -cut)},
                                                     {std::max(Alo, cut), Ahi}};
                        for (const auto& pc : pieces) {
                            double x = pc[0], y = pc[1];
                            if (x >= y) continue;
                            double lr = std::log(std::max(std::abs(x), std::abs(y)) /
                                                 std::min(std::abs(x), std::abs(y)));
                            std::size_t panels = static_cast<std::size_t>(
                                std::max(1.0, std::ceil(lr * rate *
                                                        quad.nodes_per_unit / 50.0)));
                            double h = (y - x) / static_cast<double>(panels);
                            for (std::size_t pnl = 0; pnl < panels; ++pnl) {
                                double base = x + pnl * h;
                                for (std::size_t k = 0; k < unit.size(); ++k) {
                                    double A = base + h * unit.nodes[k];
                                    double wA = h * unit.weights[k] * wcd;
                                    double a = A - t * c;
                                    double bstar = s * A - t * d;
                                    gl2::GroupElement g{a, bstar, c, d};
                                    double fv = f.value(g);
                                    double fb = (want_dt || want_ds)
                                                    ? f.grad(g).db
                                                    : 0.0;
                                    if (fv == 0.0 && fb == 0.0) continue;
                                    cplx p1 = spow(A, r1re, r1im, p.eps1);
                                    cplx term;
                                    if (mode == KernelDeriv::value)
                                        term = fv * p1 * p2;
                                    else if (want_dt)
                                        term = fb * (s * c - d) * p1 * p2 +
                                               fv * rho1 * c *
                                                   spow(A, r1re - 1.0, r1im,
                                                        p.eps1 + 1) *
                                                   p2;
                                    else
                                        term = fb * A * p1 * p2 -
                                               fv * rho2 * c * p1 * p2m;
                                    row[is].add(wA * term);
                                }
                            }
                        }
                    }
                }
                out.at(it, is) = row[is].sum;
            }
        },
        threads);
}

}  // namespace

KernelMatrix kernel_transform(const TestFunction& f, const PrincipalSeriesPoint& p,
                              const Grid1D& tgrid, const Grid1D& sgrid,
                              const FiberQuad& quad, KernelDeriv mode,
                              unsigned threads, FiberStrategy strategy) {
    tgrid.validate();
    sgrid.validate();
    KernelMatrix out;
    out.tgrid = tgrid;
    out.sgrid = sgrid;
    out.point = p;
    out.values.assign(tgrid.size() * sgrid.size(), cplx(0.0));
    const SupportData sd = support_data(f);
    bool safe;
    switch (strategy) {
        case FiberStrategy::tensor: safe = true; break;
        case FiberStrategy::intervals: safe = false; break;
        default: safe = chart_is_safe(sd, tgrid); break;
    }
    out.provenance = f.descriptor() + "|" + quad.str() + (safe ? "|tensor" : "|intervals");
    if (safe)
        kernel_tensor(f, p, quad, mode, out, threads);
    else
        kernel_intervals(f, p, quad, mode, out, threads);
    return out;
}

cplx hs_inner(const KernelMatrix& k1, const KernelMatrix& k2) {
    if (k1.tgrid.nodes != k2.tgrid.nodes || k1.sgrid.nodes != k2.sgrid.nodes)
        throw std::invalid_argument("hs_inner: grid mismatch");
    KahanC acc;
    const std::size_t nt = k1.tgrid.size(), ns = k1.sgrid.size();
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t j = 0; j < ns; ++j)
            acc.add(k1.tgrid.weights[i] * k1.sgrid.weights[j] * k1.at(i, j) *
                    std::conj(k2.at(i, j)));
    return acc.sum;
}

double hs_norm(const KernelMatrix& k) {
    return std::sqrt(std::abs(hs_inner(k, k).real()));
}

cplx group_l2_inner(const TestFunction& f1, const TestFunction& f2,
                    const QuadSpec& quad) {
    return gl2::integrate_group(
        [&](const GroupElement& g) -> cplx {
            double v1 = f1.value(g);
            if (v1 == 0.0) return 0.0;
            double v2 = f2.value(g);
            if (v2 == 0.0) return 0.0;
            return v1 * v2 * gl2::haar_weight(g);
        },
        quad);
}

SampledFunction principal_action(const PrincipalSeriesPoint& p, const GroupElement& g,
                                 const SampledFunction& phi) {
    phi.validate();
    if (phi.rank() != 1)
        throw std::invalid_argument("principal_action: 1D sample expected");
    const auto& grid = phi.grids[0];
    auto bw = numerics::barycentric_weights(grid.nodes);
    SampledFunction out = phi;
    SignedExponent e1(-1.0 + p.mu1 - p.mu2, p.eps1 - p.eps2);
    SignedExponent ed(0.5 + p.mu2, p.eps2);
    double det = g.det();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double t = grid.nodes[i];
        double den = g.a + t * g.c;
        if (std::abs(den) < 1e-12 * (1.0 + std::abs(t))) {
            std::ostringstream os;
            os << "principal_action: pole a+tc=0 at node " << i << " (t=" << t << ")";
            throw std::domain_error(os.str());
        }
        double mapped = (g.b + t * g.d) / den;
        cplx val = numerics::barycentric_eval(grid.nodes, bw, phi.values, mapped);
        out.values[i] = val * signed_power(den, e1) * signed_power(det, ed);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Discrete series (disk model)
// ---------------------------------------------------------------------------

namespace {

struct DiskNodes {
    std::vector<cplx> w;        // node positions in the disk
    std::vector<double> wt;     // r (1-r^2)^{n-1} dr dtheta weights
    std::vector<double> norms;  // orthonormalization constants n_k
};

DiskNodes disk_nodes(int n, std::size_t N, const DiskQuad& q) {
    DiskNodes out;
    auto rad = numerics::gauss_legendre(q.radial, 0.0, 1.0 - q.edge);
    out.w.reserve(q.radial * q.angular);
    out.wt.reserve(q.radial * q.angular);
    const double dth = 2.0 * pi / static_cast<double>(q.angular);
    for (std::size_t ir = 0; ir < q.radial; ++ir) {
        double r = rad.nodes[ir];
        double wr = rad.weights[ir] * r * std::pow(1.0 - r * r, n - 1);
        for (std::size_t ith = 0; ith < q.angular; ++ith) {
            double th = dth * static_cast<double>(ith);
            out.w.push_back(cplx(r * std::cos(th), r * std::sin(th)));
            out.wt.push_back(wr * dth);
        }
    }
    out.norms.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        double s = 0.0;
        for (std::size_t ir = 0; ir < q.radial; ++ir) {
            double r = rad.nodes[ir];
            s += rad.weights[ir] * std::pow(r, 2.0 * k + 1.0) *
                 std::pow(1.0 - r * r, n - 1);
        }
        out.norms[k] = std::sqrt(2.0 * pi * s);
    }
    return out;
}

}  // namespace

std::vector<cplx> ds_matrix(const DiscreteSeriesPoint& dpt, const GroupElement& g,
                            std::size_t N, HalfPlane half, const DiskQuad& quad) {
    if (N < 1) throw std::invalid_argument("ds_matrix: N must be >= 1");
    double det = g.det();
    if (det <= 0.0)
        throw std::invalid_argument("ds_matrix: needs det > 0 (half-planes preserved)");
    const int n = dpt.n;
    if (n < 1) throw std::invalid_argument("ds_matrix: n must be >= 1");
    const DiskNodes dn = disk_nodes(n, N, quad);
    const cplx i1(0.0, 1.0);
    const double sgn = (half == HalfPlane::upper) ? 1.0 : -1.0;
    const cplx Sdet = signed_power(det, SignedExponent(0.5 + 0.5 * n + i1 * dpt.tau,
                                                       dpt.delta));

    std::vector<KahanC> acc(N * N);
    std::vector<cplx> wk(N), fk(N);
    for (std::size_t node = 0; node < dn.w.size(); ++node) {
        const cplx w = dn.w[node];
        const double wt = dn.wt[node];
        // chart: upper uses z = i(1+w)/(1-w), lower the conjugate chart
        const cplx z = sgn * i1 * (1.0 + w) / (1.0 - w);
        const cplx den = g.a + z * g.c;
        const cplx zg = (g.b + z * g.d) / den;
        const cplx wprime = (zg - sgn * i1) / (zg + sgn * i1);
        // ((z + i)/(zg + i))^{n+1} carries the basis lift between the points
        const cplx lift = ipow((z + sgn * i1) / (zg + sgn * i1),
                               static_cast<unsigned>(n + 1));
        const cplx cocycle = ipow(1.0 / den, static_cast<unsigned>(n + 1));
        const cplx common = lift * cocycle * Sdet * wt;

        cplx pk(1.0, 0.0), pj(1.0, 0.0);
        for (std::size_t k = 0; k < N; ++k) {
            fk[k] = pk * common;
            wk[k] = pj;
            pk *= wprime;
            pj *= w;
        }
        for (std::size_t j = 0; j < N; ++j) {
            cplx cj = std::conj(wk[j]);
            for (std::size_t k = 0; k < N; ++k) acc[j * N + k].add(fk[k] * cj);
        }
    }
    std::vector<cplx> m(N * N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k)
            m[j * N + k] = acc[j * N + k].sum / (dn.norms[j] * dn.norms[k]);
    return m;
}

std::vector<cplx> ds_action(const DiscreteSeriesPoint& d, const GroupElement& g,
                            const std::vector<cplx>& coeffs, std::size_t N,
                            HalfPlane half, const DiskQuad& quad) {
    if (coeffs.size() != N) throw std::invalid_argument("ds_action: coeff size != N");
    auto m = ds_matrix(d, g, N, half, quad);
    std::vector<cplx> out(N, cplx(0.0));
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k) out[j] += m[j * N + k] * coeffs[k];
    return out;
}

double ds_trace(const TestFunction& f, const DiscreteSeriesPoint& d, std::size_t N,
                std::size_t g_nodes, const DiskQuad& quad, unsigned threads) {
    QuadSpec spec = gl2::support_quad(f, g_nodes);
    std::array<Grid1D, 4> gr;
    for (int i = 0; i < 4; ++i)
        gr[i] = numerics::gauss_legendre(spec.counts[i], spec.box[i].first,
                                         spec.box[i].second);
    double total = 0.0;
    for (HalfPlane half : {HalfPlane::upper, HalfPlane::lower}) {
        // integrate the matrix over the group; parallel over a-slices with a
        // fixed-order merge
        std::vector<std::vector<cplx>> slices(gr[0].size());
        parallel_for(
            gr[0].size(),
            [&](std::size_t ia) {
                std::vector<cplx> acc(N * N, cplx(0.0));
                for (std::size_t ib = 0; ib < gr[1].size(); ++ib)
                    for (std::size_t ic = 0; ic < gr[2].size(); ++ic)
                        for (std::size_t id = 0; id < gr[3].size(); ++id) {
                            GroupElement g{gr[0].nodes[ia], gr[1].nodes[ib],
                                           gr[2].nodes[ic], gr[3].nodes[id]};
                            double fv = f.value(g);
                            if (fv == 0.0) continue;
                            double w = gr[0].weights[ia] * gr[1].weights[ib] *
                                       gr[2].weights[ic] * gr[3].weights[id] * fv *
                                       gl2::haar_weight(g);
                            auto m = ds_matrix(d, g, N, half, quad);
                            for (std::size_t x = 0; x < N * N; ++x)
                                acc[x] += w * m[x];
                        }
                slices[ia] = std::move(acc);
            },
            threads);
        std::vector<cplx> T(N * N, cplx(0.0));
        for (const auto& s : slices)
            for (std::size_t x = 0; x < N * N; ++x) T[x] += s[x];
        double fro = 0.0;
        for (const auto& v : T) fro += std::norm(v);
        total += fro;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Parseval column machinery
// ---------------------------------------------------------------------------

namespace {

// Composite log-panel rule on [lo, hi] sized against phase rate `rate`.
struct LogRule {
    std::vector<double> q;  // log coordinate
    std::vector<double> w;
};

LogRule log_rule(double lo, double hi, double rate, double nodes_per_unit) {
    LogRule r;
    if (!(lo < hi)) return r;
    double len = hi - lo;
    double per_panel = std::max(0.35, 4.0 / std::max(rate, 1.0));
    std::size_t panels =
        static_cast<std::size_t>(std::max(1.0, std::ceil(len / per_panel)));
    std::size_t nper = static_cast<std::size_t>(
        std::max(6.0, std::ceil(nodes_per_unit * per_panel)));
    static thread_local std::vector<std::pair<std::size_t, numerics::Grid1D>> cache;
    const numerics::Grid1D* unit = nullptr;
    for (auto& e : cache)
        if (e.first == nper) unit = &e.second;
    if (!unit) {
        cache.emplace_back(nper, numerics::gauss_legendre(nper, 0.0, 1.0));
        unit = &cache.back().second;
    }
    double h = len / static_cast<double>(panels);
    r.q.reserve(panels * nper);
    r.w.reserve(panels * nper);
    for (std::size_t p = 0; p < panels; ++p) {
        double base = lo + p * h;
        for (std::size_t k = 0; k < unit->size(); ++k) {
            r.q.push_back(base + h * unit->nodes[k]);
            r.w.push_back(h * unit->weights[k]);
        }
    }
    return r;
}

struct ColumnSpec {
    double t;
    double s0;
    double c;
    // windows per sign sector
};

// Accumulates the kernel column values K(t, s0 | tau-grid, sectors) for an
// invariant test function, by tabulating the integrand against (p, q) =
// (log|a+tc|, log|d-c s0|) and contracting with the tau phases.
class ColumnSweep {
  public:
    ColumnSweep(const TestFunction& f, double s0, const Grid1D& taugrid,
                double nodes_per_unit)
        : f_(f), sd_(support_data(f)), s0_(s0), taus_(taugrid),
          npu_(nodes_per_unit) {}

    // col[sector][itau1*ntau+itau2] for sector = eps1*2+eps2
    void column(double t, double c, double wc, std::vector<std::vector<cplx>>& col) const {
        const double rate = taus_.nodes.empty()
                                ? 1.0
                                : std::max(std::abs(taus_.nodes.front()),
                                           std::abs(taus_.nodes.back()));
        const double Rv = sd_.Rd + std::abs(c * s0_);
        const double umax_box = sd_.Ra + std::abs(t * c);
        // |b*| <= Rb gives |d| <= (Rb + |s0 u| + |t c s0|)/|t| for large t;
        // keep the simple box bounds and let F reject the rest pointwise.
        double vhi = std::log(Rv);
        double vlo = std::log(sd_.margin / std::max(umax_box, 1e-300));
        if (!(vlo < vhi)) return;
        double uhi, ulo;
        bool both_signs;
        double tc = t * c;
        if (std::abs(tc) > sd_.Ra * 1.02) {
            both_signs = false;
            ulo = std::log(std::abs(tc) - sd_.Ra);
            uhi = std::log(std::abs(tc) + sd_.Ra);
        } else {
            both_signs = true;
            uhi = std::log(umax_box);
            ulo = std::log(sd_.margin / std::max(std::exp(vhi), 1e-300));
            if (!(ulo < uhi)) return;
        }
        LogRule pr = log_rule(ulo, uhi, rate, npu_);
        LogRule qr = log_rule(vlo, vhi, rate, npu_);
        if (pr.q.empty() || qr.q.empty()) return;

        const std::size_t np = pr.q.size(), nq = qr.q.size(), ntau = taus_.size();
        // phase tables e^{i tau p}, e^{i tau q}
        std::vector<cplx> ep(ntau * np), eq(ntau * nq);
        for (std::size_t a = 0; a < ntau; ++a) {
            double tau = taus_.nodes[a];
            for (std::size_t k = 0; k < np; ++k)
                ep[a * np + k] = cplx(std::cos(tau * pr.q[k]), std::sin(tau * pr.q[k]));
            for (std::size_t k = 0; k < nq; ++k)
                eq[a * nq + k] = cplx(std::cos(tau * qr.q[k]), std::sin(tau * qr.q[k]));
        }
        std::vector<double> H(np * nq);
        std::vector<cplx> M(np * ntau);
        const int susigns = both_signs ? 2 : 1;
        const double fixed_su = (tc >= 0.0) ? 1.0 : -1.0;
        for (int isu = 0; isu < susigns; ++isu) {
            double su = both_signs ? (isu == 0 ? 1.0 : -1.0) : fixed_su;
            for (int isv = 0; isv < 2; ++isv) {
                double sv = (isv == 0) ? 1.0 : -1.0;
                bool any = false;
                for (std::size_t kp = 0; kp < np; ++kp) {
                    double u = su * std::exp(pr.q[kp]);
                    double a = u - tc;
                    double epw = std::exp(-0.5 * pr.q[kp]) * pr.w[kp];
                    for (std::size_t kq = 0; kq < nq; ++kq) {
                        double v = sv * std::exp(qr.q[kq]);
                        double d = v + c * s0_;
                        double bstar = s0_ * u - t * v - t * c * s0_;
                        double fv = f_.value4(a, bstar, c, d);
                        if (fv == 0.0) {
                            H[kp * nq + kq] = 0.0;
                            continue;
                        }
                        any = true;
                        H[kp * nq + kq] =
                            fv * epw * std::exp(-0.5 * qr.q[kq]) * qr.w[kq];
                    }
                }
                if (!any) continue;
                // contract q then p
                for (std::size_t kp = 0; kp < np; ++kp)
                    for (std::size_t a = 0; a < ntau; ++a) {
                        cplx acc(0.0);
                        const cplx* row = &eq[a * nq];
                        const double* h = &H[kp * nq];
                        for (std::size_t kq = 0; kq < nq; ++kq) acc += h[kq] * row[kq];
                        M[kp * ntau + a] = acc;
                    }
                for (std::size_t a1 = 0; a1 < ntau; ++a1)
                    for (std::size_t a2 = 0; a2 < ntau; ++a2) {
                        cplx acc(0.0);
                        const cplx* col1 = &ep[a1 * np];
                        for (std::size_t kp = 0; kp < np; ++kp)
                            acc += col1[kp] * M[kp * ntau + a2];
                        acc *= wc;
                        // sectors: eps1*2+eps2 with sign weights su^e1 sv^e2
                        for (int e1 = 0; e1 < 2; ++e1)
                            for (int e2 = 0; e2 < 2; ++e2) {
                                double sgnw = ((e1 && su < 0) ? -1.0 : 1.0) *
                                              ((e2 && sv < 0) ? -1.0 : 1.0);
                                col[e1 * 2 + e2][a1 * ntau + a2] += sgnw * acc;
                            }
                    }
            }
        }
    }

  private:
    const TestFunction& f_;
    SupportData sd_;
    double s0_;
    Grid1D taus_;
    double npu_;
};

}  // namespace

double invariant_hs_norm_sq(const TestFunction& f, const PrincipalSeriesPoint& p,
                            std::size_t theta_nodes, std::size_t c_nodes,
                            double nodes_per_unit, double s0) {
    if (p.mu1.real() != 0.0 || p.mu2.real() != 0.0)
        throw std::invalid_argument("invariant_hs_norm_sq: unitary axis only");
    Grid1D taus;  // single-point "grid" for tau1; handled via two 1-node grids
    // Evaluate directly: K(t, s0) for each t on the compactified grid.
    Grid1D tg = numerics::tan_compactified(theta_nodes);
    const SupportData sd = support_data(f);
    const auto gc = numerics::gauss_legendre(c_nodes, sd.clo, sd.chi);
    const double tau1 = p.mu1.imag(), tau2 = p.mu2.imag();
    const double rate = std::max(std::abs(tau1), std::abs(tau2));

    double total = 0.0;
    std::vector<double> contrib(tg.size(), 0.0);
    parallel_for(tg.size(), [&](std::size_t it) {
        double t = tg.nodes[it];
        KahanC kv;
        for (std::size_t ic = 0; ic < gc.size(); ++ic) {
            double c = gc.nodes[ic];
            double wc = gc.weights[ic];
            const double Rv = sd.Rd + std::abs(c * s0);
            const double umax_box = sd.Ra + std::abs(t * c);
            double vhi = std::log(Rv);
            double vlo = std::log(sd.margin / std::max(umax_box, 1e-300));
            if (!(vlo < vhi)) continue;
            double tc = t * c;
            bool both_signs = !(std::abs(tc) > sd.Ra * 1.02);
            double ulo, uhi;
            if (!both_signs) {
                ulo = std::log(std::abs(tc) - sd.Ra);
                uhi = std::log(std::abs(tc) + sd.Ra);
            } else {
                uhi = std::log(umax_box);
                ulo = std::log(sd.margin / std::exp(vhi));
                if (!(ulo < uhi)) continue;
            }
            LogRule pr = log_rule(ulo, uhi, std::max(1.0, rate), nodes_per_unit);
            LogRule qr = log_rule(vlo, vhi, std::max(1.0, rate), nodes_per_unit);
            const double fixed_su = (tc >= 0.0) ? 1.0 : -1.0;
            for (int isu = 0; isu < (both_signs ? 2 : 1); ++isu) {
                double su = both_signs ? (isu == 0 ? 1.0 : -1.0) : fixed_su;
                double sgn1 = (p.eps1 && su < 0) ? -1.0 : 1.0;
                for (int isv = 0; isv < 2; ++isv) {
                    double sv = (isv == 0) ? 1.0 : -1.0;
                    double sgn = sgn1 * ((p.eps2 && sv < 0) ? -1.0 : 1.0);
                    for (std::size_t kp = 0; kp < pr.q.size(); ++kp) {
                        double u = su * std::exp(pr.q[kp]);
                        double a = u - tc;
                        cplx pph(std::cos(tau1 * pr.q[kp]), std::sin(tau1 * pr.q[kp]));
                        double pwt = std::exp(-0.5 * pr.q[kp]) * pr.w[kp];
                        for (std::size_t kq = 0; kq < qr.q.size(); ++kq) {
                            double v = sv * std::exp(qr.q[kq]);
                            double d = v + c * s0;
                            double bstar = s0 * u - t * v - t * c * s0;
                            double fv = f.value4(a, bstar, c, d);
                            if (fv == 0.0) continue;
                            cplx qph(std::cos(tau2 * qr.q[kq]),
                                     std::sin(tau2 * qr.q[kq]));
                            kv.add(sgn * fv * pwt * std::exp(-0.5 * qr.q[kq]) *
                                   qr.w[kq] * wc * pph * qph);
                        }
                    }
                }
            }
        }
        contrib[it] = tg.weights[it] * std::norm(kv.sum);
    });
    for (double x : contrib) total += x;
    return pi * (1.0 + s0 * s0) * total;
}

ParsevalReport parseval_principal(const TestFunction& f1, const TestFunction& f2,
                                  const ParsevalOptions& opts) {
    ParsevalReport rep;
    const bool same = (&f1 == &f2) || (f1.descriptor() == f2.descriptor());

    Grid1D taug = numerics::gauss_legendre(opts.tau_nodes, -opts.tau_max, opts.tau_max);
    Grid1D tg = numerics::tan_compactified(opts.theta_nodes);
    const SupportData sd1 = support_data(f1);
    const auto gc = numerics::gauss_legendre(opts.c_nodes, sd1.clo, sd1.chi);
    const std::size_t ntau = taug.size();

    ColumnSweep sweep1(f1, 0.0, taug, opts.nodes_per_unit);
    ColumnSweep sweep2(f2, 0.0, taug, opts.nodes_per_unit);

    // per-theta contributions to the HS accumulators, merged in grid order
    std::vector<std::vector<std::vector<double>>> parts(
        tg.size(), std::vector<std::vector<double>>(4, std::vector<double>(ntau * ntau,
                                                                           0.0)));
    parallel_for(
        tg.size(),
        [&](std::size_t it) {
            double t = tg.nodes[it];
            std::vector<std::vector<cplx>> col1(4, std::vector<cplx>(ntau * ntau,
                                                                     cplx(0.0)));
            for (std::size_t ic = 0; ic < gc.size(); ++ic)
                sweep1.column(t, gc.nodes[ic], gc.weights[ic], col1);
            if (same) {
                for (int sct = 0; sct < 4; ++sct)
                    for (std::size_t x = 0; x < ntau * ntau; ++x)
                        parts[it][sct][x] = tg.weights[it] * std::norm(col1[sct][x]);
            } else {
                std::vector<std::vector<cplx>> col2(4, std::vector<cplx>(ntau * ntau,
                                                                         cplx(0.0)));
                for (std::size_t ic = 0; ic < gc.size(); ++ic)
                    sweep2.column(t, gc.nodes[ic], gc.weights[ic], col2);
                for (int sct = 0; sct < 4; ++sct)
                    for (std::size_t x = 0; x < ntau * ntau; ++x)
                        parts[it][sct][x] =
                            tg.weights[it] *
                            (col1[sct][x] * std::conj(col2[sct][x])).real();
            }
        },
        opts.threads);

    std::vector<std::vector<double>> hs(4, std::vector<double>(ntau * ntau, 0.0));
    for (std::size_t it = 0; it < tg.size(); ++it)
        for (int sct = 0; sct < 4; ++sct)
            for (std::size_t x = 0; x < ntau * ntau; ++x)
                hs[sct][x] += pi * parts[it][sct][x];

    // Plancherel aggregation and the outer-shell tail share
    double total = 0.0, shell = 0.0;
    const double edge = 0.9 * opts.tau_max;
    for (int e1 = 0; e1 < 2; ++e1)
        for (int e2 = 0; e2 < 2; ++e2) {
            double sector = 0.0;
            for (std::size_t a1 = 0; a1 < ntau; ++a1)
                for (std::size_t a2 = 0; a2 < ntau; ++a2) {
                    double w = taug.weights[a1] * taug.weights[a2] *
                               specfun::plancherel_density(taug.nodes[a1],
                                                           taug.nodes[a2], e1 - e2);
                    double v = w * hs[e1 * 2 + e2][a1 * ntau + a2];
                    sector += v;
                    if (std::abs(taug.nodes[a1]) > edge ||
                        std::abs(taug.nodes[a2]) > edge)
                        shell += v;
                }
            rep.principal.push_back({e1, e2, sector});
            total += sector;
        }
    rep.principal_total = total;
    rep.tau_tail_fraction = total != 0.0 ? shell / total : 0.0;
    rep.tail_warning = rep.tau_tail_fraction > 0.01;

    // group-side inner product
    QuadSpec gq = gl2::support_quad2(f1, f2, 24);
    rep.lhs = group_l2_inner(f1, f2, gq);
    rep.ratio = total != 0.0 ? rep.lhs.real() / total : 0.0;

    // diagonal-invariance consistency: one mid-grid parameter point, shifted
    // column anchor
    {
        PrincipalSeriesPoint probe =
            PrincipalSeriesPoint::unitary(taug.nodes[ntau / 3], 0,
                                          taug.nodes[(2 * ntau) / 3], 0);
        double h0 = invariant_hs_norm_sq(f1, probe, opts.theta_nodes, opts.c_nodes,
                                         opts.nodes_per_unit, 0.0);
        double h1 = invariant_hs_norm_sq(f1, probe, opts.theta_nodes, opts.c_nodes,
                                         opts.nodes_per_unit, 0.45);
        rep.column_consistency = std::abs(h1 / h0 - 1.0);
    }

    if (opts.with_discrete) {
        double worst = 0.0, weighted = 0.0;
        for (int n : {1, 2}) {
            for (double tau : {0.0, 0.9}) {
                double tr = ds_trace(same ? f1 : f1, {n, tau, 0}, opts.discrete_N, 8,
                                     {}, opts.threads);
                worst = std::max(worst, tr);
                weighted += tr * specfun::discrete_density(n) * opts.tau_max;
            }
        }
        rep.discrete_total = weighted;
        rep.discrete_truncation = opts.discrete_N;
        std::ostringstream os;
        os << "max discrete-series trace sample " << worst;
        rep.notes = os.str();
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {
void write_doubles(std::ostream& os, const std::vector<double>& v) {
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    os << "\n";
}
}  // namespace

void write_kernel(std::ostream& os, const KernelMatrix& k) {
    k.validate();
    os << "KMv1\n";
    os << std::setprecision(17);
    os << "point " << k.point.mu1.real() << " " << k.point.mu1.imag() << " "
       << k.point.eps1 << " " << k.point.mu2.real() << " " << k.point.mu2.imag() << " "
       << k.point.eps2 << "\n";
    os << "provenance " << k.provenance << "\n";
    for (const auto* g : {&k.tgrid, &k.sgrid}) {
        os << "grid " << (g->kind == numerics::GridKind::uniform ? "uniform" : "gauss")
           << " " << g->size() << "\n";
        write_doubles(os, g->nodes);
        write_doubles(os, g->weights);
    }
    os << "values " << k.tgrid.size() << " " << k.sgrid.size() << "\n";
    for (std::size_t i = 0; i < k.tgrid.size(); ++i) {
        for (std::size_t j = 0; j < k.sgrid.size(); ++j) {
            const cplx& v = k.at(i, j);
            os << (j ? " " : "") << v.real() << " " << v.imag();
        }
        os << "\n";
    }
    os << "end\n";
}

KernelMatrix read_kernel(std::istream& is) {
    std::string tok;
    is >> tok;
    if (tok != "KMv1") throw std::runtime_error("read_kernel: bad magic");
    KernelMatrix k;
    is >> tok;
    if (tok != "point") throw std::runtime_error("read_kernel: expected point");
    double r1, i1, r2, i2;
    is >> r1 >> i1 >> k.point.eps1 >> r2 >> i2 >> k.point.eps2;
    k.point.mu1 = cplx(r1, i1);
    k.point.mu2 = cplx(r2, i2);
    is >> tok;
    if (tok != "provenance") throw std::runtime_error("read_kernel: expected provenance");
    std::getline(is, k.provenance);
    if (!k.provenance.empty() && k.provenance.front() == ' ')
        k.provenance.erase(k.provenance.begin());
    for (auto* g : {&k.tgrid, &k.sgrid}) {
        std::string kind;
        std::size_t n;
        is >> tok >> kind >> n;
        if (tok != "grid") throw std::runtime_error("read_kernel: expected grid");
        g->kind = kind == "uniform" ? numerics::GridKind::uniform
                                    : numerics::GridKind::gauss_legendre;
        g->nodes.resize(n);
        g->weights.resize(n);
        for (auto& x : g->nodes) is >> x;
        for (auto& x : g->weights) is >> x;
    }
    std::size_t nt, ns;
    is >> tok >> nt >> ns;
    if (tok != "values") throw std::runtime_error("read_kernel: expected values");
    k.values.resize(nt * ns);
    for (auto& v : k.values) {
        double re, im;
        is >> re >> im;
        v = cplx(re, im);
    }
    is >> tok;
    if (tok != "end") throw std::runtime_error("read_kernel: missing end");
    k.validate();
    return k;
}

std::string kernel_cache_key(const std::string& fdesc, const PrincipalSeriesPoint& p,
                             const Grid1D& tgrid, const Grid1D& sgrid,
                             const std::string& quad_desc) {
    std::ostringstream os;
    os << std::setprecision(17) << fdesc << "|" << p.str() << "|" << quad_desc << "|";
    for (double x : tgrid.nodes) os << x << ",";
    os << "|";
    for (double x : sgrid.nodes) os << x << ",";
    const std::string s = os.str();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << h;
    return hex.str();
}

}  // namespace glharm::fourier
