#include "glharm/opcalc.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace glharm::opcalc {

PrincipalSeriesPoint shift_point(const PrincipalSeriesPoint& p, const ShiftOp& v) {
    if (v.index != 1 && v.index != 2)
        throw std::invalid_argument("shift_point: index must be 1 or 2");
    if (v.sign != 1 && v.sign != -1)
        throw std::invalid_argument("shift_point: sign must be +1 or -1");
    PrincipalSeriesPoint q = p;
    if (v.index == 1) {
        q.mu1 += static_cast<double>(v.sign);
        q.eps1 = (q.eps1 + 1) & 1;
    } else {
        q.mu2 += static_cast<double>(v.sign);
        q.eps2 = (q.eps2 + 1) & 1;
    }
    return q;
}

cplx RationalCoef::eval(const PrincipalSeriesPoint& p) const {
    cplx den = d0 + d1 * p.mu1 + d2 * p.mu2;
    if (d1 != cplx(0.0) || d2 != cplx(0.0)) {
        if (std::abs(p.mu1 - p.mu2) < 1e-6) {
            std::ostringstream os;
            os << "RationalCoef: |mu1-mu2| = " << std::abs(p.mu1 - p.mu2)
               << " below the 1e-6 guard at " << p.str();
            throw std::domain_error(os.str());
        }
    }
    return (c0 + c1 * p.mu1 + c2 * p.mu2) / den;
}

RationalCoef RationalCoef::one() {
    RationalCoef r;
    r.c0 = 1.0;
    return r;
}

std::string to_string(CoefAt c) { return c == CoefAt::target ? "target" : "source"; }

namespace {

RationalCoef over_mu_diff(cplx c0, cplx c1, cplx c2) {
    RationalCoef r;
    r.c0 = c0;
    r.c1 = c1;
    r.c2 = c2;
    r.d0 = 0.0;
    r.d1 = 1.0;
    r.d2 = -1.0;
    return r;
}

RationalCoef linear(cplx c0, cplx c1, cplx c2) {
    RationalCoef r;
    r.c0 = c0;
    r.c1 = c1;
    r.c2 = c2;
    return r;
}

}  // namespace

std::vector<DiffDiffOp> builtin_ops() {
    std::vector<DiffDiffOp> ops;

    {
        DiffDiffOp e12{"E12", GeneratorId::e12, {}, CoefAt::target};
        e12.terms.push_back({RationalCoef::one(), DerivKind::dt, {}, {}});
        ops.push_back(std::move(e12));
    }
    {
        DiffDiffOp e43{"E43", GeneratorId::e43, {}, CoefAt::target};
        DiffDiffTerm t;
        t.coef = RationalCoef::one();
        t.deriv = DerivKind::mobius_s;
        t.mobius_mult = linear(-1.0, -1.0, 1.0);  // -1 - mu1 + mu2
        e43.terms.push_back(std::move(t));
        ops.push_back(std::move(e43));
    }
    {
        DiffDiffOp e14{"E14", GeneratorId::e14, {}, CoefAt::target};
        e14.terms.push_back(
            {over_mu_diff(-0.5, 1.0, 0.0), DerivKind::ds, {}, {ShiftOp{1, -1}}});
        e14.terms.push_back(
            {over_mu_diff(-0.5, 0.0, 1.0), DerivKind::dt, {}, {ShiftOp{2, -1}}});
        ops.push_back(std::move(e14));
    }
    {
        DiffDiffOp e32{"E32", GeneratorId::e32, {}, CoefAt::target};
        e32.terms.push_back(
            {over_mu_diff(0.5, 1.0, 0.0), DerivKind::dt, {}, {ShiftOp{1, +1}}});
        e32.terms.push_back(
            {over_mu_diff(0.5, 0.0, 1.0), DerivKind::ds, {}, {ShiftOp{2, +1}}});
        ops.push_back(std::move(e32));
    }
    {
        DiffDiffOp ec{"Ec", GeneratorId::mult_c, {}, CoefAt::target};
        ec.terms.push_back(
            {over_mu_diff(1.0, 0.0, 0.0), DerivKind::dt, {}, {ShiftOp{1, +1}}});
        ec.terms.push_back(
            {over_mu_diff(1.0, 0.0, 0.0), DerivKind::ds, {}, {ShiftOp{2, +1}}});
        ops.push_back(std::move(ec));
    }
    {
        DiffDiffOp ed{"Edetinv", GeneratorId::mult_det_inv, {}, CoefAt::target};
        ed.terms.push_back({RationalCoef::one(), DerivKind::none, {},
                            {ShiftOp{1, -1}, ShiftOp{2, -1}}});
        ops.push_back(std::move(ed));
    }
    {
        DiffDiffOp eb{"Edb", GeneratorId::d_db, {}, CoefAt::target};
        eb.terms.push_back(
            {over_mu_diff(-1.5, 1.0, 0.0), DerivKind::ds, {}, {ShiftOp{1, -1}}});
        eb.terms.push_back(
            {over_mu_diff(-1.5, 0.0, 1.0), DerivKind::dt, {}, {ShiftOp{2, -1}}});
        ops.push_back(std::move(eb));
    }
    return ops;
}

const DiffDiffOp& builtin(GeneratorId partner) {
    static const std::vector<DiffDiffOp> ops = builtin_ops();
    for (const auto& op : ops)
        if (op.partner == partner) return op;
    throw std::invalid_argument("builtin: no Fourier-side operator for " +
                                gl2::to_string(partner));
}

namespace {

PrincipalSeriesPoint shifted_point(const PrincipalSeriesPoint& p,
                                   const std::vector<ShiftOp>& shifts) {
    PrincipalSeriesPoint q = p;
    for (const auto& s : shifts) q = shift_point(q, s);
    return q;
}

void accumulate_term(KernelMatrix& acc, const DiffDiffTerm& term, cplx coef,
                     const PrincipalSeriesPoint& eval_at, const KernelMatrix& kval,
                     const KernelMatrix* kderiv) {
    const auto& sg = acc.sgrid.nodes;
    const std::size_t nt = acc.tgrid.size(), ns = sg.size();
    switch (term.deriv) {
        case DerivKind::none:
            for (std::size_t i = 0; i < nt; ++i)
                for (std::size_t j = 0; j < ns; ++j)
                    acc.at(i, j) += coef * kval.at(i, j);
            break;
        case DerivKind::dt:
        case DerivKind::ds:
            for (std::size_t i = 0; i < nt; ++i)
                for (std::size_t j = 0; j < ns; ++j)
                    acc.at(i, j) += coef * kderiv->at(i, j);
            break;
        case DerivKind::mobius_s: {
            cplx m = term.mobius_mult.eval(eval_at);
            for (std::size_t i = 0; i < nt; ++i)
                for (std::size_t j = 0; j < ns; ++j) {
                    double s = sg[j];
                    acc.at(i, j) +=
                        coef * (-s * s * kderiv->at(i, j) + m * s * kval.at(i, j));
                }
            break;
        }
    }
}

}  // namespace

KernelMatrix apply_diffdiff(const DiffDiffOp& op, const TestFunction& f,
                            const PrincipalSeriesPoint& p, const Grid1D& tgrid,
                            const Grid1D& sgrid, const FiberQuad& quad,
                            unsigned threads) {
    KernelMatrix acc;
    acc.tgrid = tgrid;
    acc.sgrid = sgrid;
    acc.point = p;
    acc.values.assign(tgrid.size() * sgrid.size(), cplx(0.0));
    acc.provenance = op.name + "|" + to_string(op.coef_at);
    for (const auto& term : op.terms) {
        PrincipalSeriesPoint ps = shifted_point(p, term.shifts);
        PrincipalSeriesPoint eval_at = (op.coef_at == CoefAt::target) ? p : ps;
        cplx coef = term.coef.eval(eval_at);
        KernelMatrix kval, kderiv;
        const KernelMatrix* kd = nullptr;
        if (term.deriv == DerivKind::none || term.deriv == DerivKind::mobius_s)
            kval = fourier::kernel_transform(f, ps, tgrid, sgrid, quad,
                                             fourier::KernelDeriv::value, threads);
        if (term.deriv == DerivKind::dt) {
            kderiv = fourier::kernel_transform(f, ps, tgrid, sgrid, quad,
                                               fourier::KernelDeriv::dt, threads);
            kd = &kderiv;
        } else if (term.deriv == DerivKind::ds || term.deriv == DerivKind::mobius_s) {
            kderiv = fourier::kernel_transform(f, ps, tgrid, sgrid, quad,
                                               fourier::KernelDeriv::ds, threads);
            kd = &kderiv;
        }
        accumulate_term(acc, term, coef, eval_at, kval, kd);
    }
    return acc;
}

KernelMatrix apply_diffdiff_synthetic(const DiffDiffOp& op, const SyntheticKernel& k,
                                      const PrincipalSeriesPoint& p,
                                      const Grid1D& tgrid, const Grid1D& sgrid) {
    KernelMatrix acc;
    acc.tgrid = tgrid;
    acc.sgrid = sgrid;
    acc.point = p;
    acc.values.assign(tgrid.size() * sgrid.size(), cplx(0.0));
    acc.provenance = op.name + "|synthetic";
    for (const auto& term : op.terms) {
        PrincipalSeriesPoint ps = shifted_point(p, term.shifts);
        PrincipalSeriesPoint eval_at = (op.coef_at == CoefAt::target) ? p : ps;
        cplx coef = term.coef.eval(eval_at);
        for (std::size_t i = 0; i < tgrid.size(); ++i)
            for (std::size_t j = 0; j < sgrid.size(); ++j) {
                double t = tgrid.nodes[i], s = sgrid.nodes[j];
                cplx v;
                switch (term.deriv) {
                    case DerivKind::none: v = k.value(t, s); break;
                    case DerivKind::dt: v = k.dt(t, s); break;
                    case DerivKind::ds: v = k.ds(t, s); break;
                    case DerivKind::mobius_s:
                        v = -s * s * k.ds(t, s) +
                            term.mobius_mult.eval(eval_at) * s * k.value(t, s);
                        break;
                }
                acc.at(i, j) += coef * v;
            }
    }
    return acc;
}

double derivative_crosscheck(const TestFunction& f, const PrincipalSeriesPoint& p,
                             const Grid1D& tgrid, const Grid1D& sgrid,
                             const FiberQuad& quad, fourier::KernelDeriv which,
                             std::size_t samples) {
    if (which == fourier::KernelDeriv::value)
        throw std::invalid_argument("derivative_crosscheck: pick dt or ds");
    const bool along_t = which == fourier::KernelDeriv::dt;
    const Grid1D& axis = along_t ? tgrid : sgrid;
    const Grid1D& other = along_t ? sgrid : tgrid;
    double dev = 0.0, scale = 0.0;
    const double span = axis.nodes.back() - axis.nodes.front();
    const double h = 0.001 * span;
    for (std::size_t k = 0; k < samples; ++k) {
        std::size_t idx = (k + 1) * axis.size() / (samples + 1);
        double x0 = axis.nodes[idx];
        // five-node uniform stencil grid around x0
        Grid1D st;
        st.kind = numerics::GridKind::uniform;
        for (int m = -2; m <= 2; ++m) {
            st.nodes.push_back(x0 + m * h);
            st.weights.push_back(h);
        }
        KernelMatrix kv = along_t
                              ? fourier::kernel_transform(f, p, st, other, quad)
                              : fourier::kernel_transform(f, p, other, st, quad);
        KernelMatrix kd = fourier::kernel_transform(
            f, p, along_t ? st : other, along_t ? other : st, quad, which);
        for (std::size_t j = 0; j < other.size(); ++j) {
            auto val = [&](std::size_t i) {
                return along_t ? kv.at(i, j) : kv.at(j, i);
            };
            cplx fd =
                (val(0) - 8.0 * val(1) + 8.0 * val(3) - val(4)) / (12.0 * h);
            cplx an = along_t ? kd.at(2, j) : kd.at(j, 2);
            dev = std::max(dev, std::abs(fd - an));
            scale = std::max(scale, std::abs(an));
        }
    }
    return scale > 0.0 ? dev / scale : dev;
}

CorrespondenceReport verify_correspondence(GeneratorId pair, const TestFunction& f,
                                           const PrincipalSeriesPoint& p,
                                           const Grid1D& tgrid, const Grid1D& sgrid,
                                           const FiberQuad& quad, bool with_refinement,
                                           unsigned threads) {
    const DiffDiffOp& op = builtin(pair);
    TestFunction gf = gl2::apply_generator(pair, f);

    auto run = [&](const FiberQuad& fq, CoefAt conv, double* lhs_norm,
                   double* node_max) {
        KernelMatrix lhs = fourier::kernel_transform(
            gf, p, tgrid, sgrid, fq, fourier::KernelDeriv::value, threads);
        DiffDiffOp o = op;
        o.coef_at = conv;
        KernelMatrix rhs = apply_diffdiff(o, f, p, tgrid, sgrid, fq, threads);
        KernelMatrix diff = lhs;
        double nmax = 0.0;
        for (std::size_t i = 0; i < diff.values.size(); ++i) {
            diff.values[i] -= rhs.values[i];
            nmax = std::max(nmax, std::abs(diff.values[i]));
        }
        double ln = fourier::hs_norm(lhs);
        if (lhs_norm) *lhs_norm = ln;
        if (node_max) *node_max = nmax;
        return fourier::hs_norm(diff) / (ln > 0.0 ? ln : 1.0);
    };

    CorrespondenceReport rep;
    rep.pair = gl2::to_string(pair);
    rep.point = p.str();
    rep.fdesc = f.descriptor();

    double lhsn = 0.0, nmax_t = 0.0, nmax_s = 0.0;
    double rt = run(quad, CoefAt::target, &lhsn, &nmax_t);
    bool has_shifted_coef = false;
    for (const auto& term : op.terms)
        if (!term.shifts.empty() &&
            (term.coef.d1 != cplx(0.0) || term.coef.d2 != cplx(0.0)))
            has_shifted_coef = true;
    double rs = has_shifted_coef ? run(quad, CoefAt::source, nullptr, &nmax_s) : rt;

    rep.lhs_norm = lhsn;
    if (rt <= rs) {
        rep.residual = rt;
        rep.residual_other = rs;
        rep.convention = CoefAt::target;
        rep.per_node_max = nmax_t;
    } else {
        rep.residual = rs;
        rep.residual_other = rt;
        rep.convention = CoefAt::source;
        rep.per_node_max = nmax_s;
    }

    if (with_refinement) {
        rep.refined_residual = run(quad.refined(), rep.convention, nullptr, nullptr);
        rep.refinement_ratio =
            rep.refined_residual > 0.0 ? rep.residual / rep.refined_residual : 1e18;
    }
    return rep;
}

}  // namespace glharm::opcalc
