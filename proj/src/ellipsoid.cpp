#include "segavd/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace segavd {

Ellipsoid::Ellipsoid(Vec center, SymMat shape) : center_(std::move(center)), shape_(std::move(shape)) {
    if (shape_.dim() != center_.size())
        throw UsageError("Ellipsoid: shape dimension does not match center");
    if (shape_.max_sym_defect() > 1e-12 * std::max(shape_.max_abs(), 1.0))
        throw UsageError("Ellipsoid: shape matrix is not symmetric");
    shape_.symmetrize();
}

Ellipsoid Ellipsoid::scaled(double lambda) const {
    if (lambda <= 0.0) throw UsageError("Ellipsoid::scaled: scale must be positive");
    return Ellipsoid(center_, shape_ * (1.0 / (lambda * lambda)));
}

const EigenSym& Ellipsoid::axes() const {
    if (!axes_cache_) {
        auto eig = std::make_shared<EigenSym>(eigen_sym(shape_));
        for (double v : eig->values)
            if (v <= 0.0) throw UsageError("Ellipsoid: shape matrix is not positive definite");
        axes_cache_ = std::move(eig);
    }
    return *axes_cache_;
}

double Ellipsoid::max_semiaxis() const { return 1.0 / std::sqrt(axes().values.front()); }
double Ellipsoid::min_semiaxis() const { return 1.0 / std::sqrt(axes().values.back()); }

double Ellipsoid::volume() const {
    return unit_ball_volume(static_cast<int>(dim())) * std::exp(-0.5 * log_det_shape());
}

double Ellipsoid::log_det_shape() const { return log_det_spd(shape_); }

const SymMat& Ellipsoid::whitener() const {
    if (!whitener_cache_) {
        const EigenSym& eig = axes();
        const std::size_t d = dim();
        auto l = std::make_shared<SymMat>(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k)
                (*l)(i, k) = eig.vectors(i, k) / std::sqrt(eig.values[k]);
        whitener_cache_ = std::move(l);
    }
    return *whitener_cache_;
}

Vec Ellipsoid::sample_boundary(Rng& rng) const {
    const Vec u = rng.unit_vector(dim());
    Vec y = center_;
    const SymMat& l = whitener();
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t k = 0; k < dim(); ++k) y[i] += l(i, k) * u[k];
    return y;
}

Vec Ellipsoid::sample_interior(Rng& rng) const {
    const Vec u = rng.in_unit_ball(dim());
    Vec y = center_;
    const SymMat& l = whitener();
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t k = 0; k < dim(); ++k) y[i] += l(i, k) * u[k];
    return y;
}

double concentric_support(const Ellipsoid& e, const ConcentricConstraint& c) {
    // lambda_max(L^T M L) with L the whitening factor of the shape matrix A.
    const EigenSym& eig = e.axes();
    const std::size_t d = e.dim();
    if (c.kind == ConcentricConstraint::Kind::Ball) {
        return 1.0 / eig.values.front();  // largest semiaxis squared
    }
    // L^T (I - v v^T) L = Lambda^{-1} - w w^T with w = L^T v
    SymMat g(d);
    Vec w(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += eig.vectors(i, k) * c.axis[i];
        w[k] = s / std::sqrt(eig.values[k]);
    }
    for (std::size_t k = 0; k < d; ++k) g(k, k) = 1.0 / eig.values[k];
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) g(i, j) -= w[i] * w[j];
    const EigenSym ge = eigen_sym(g, Tolerances::global().containment_eig);
    return std::max(ge.values.back(), 0.0);
}

bool concentric_containment(const Ellipsoid& e, const ConcentricConstraint& c,
                            const Vec& constraint_center) {
    check_dims(e.center(), constraint_center, "concentric_containment");
    const double center_gap = dist(e.center(), constraint_center);
    if (center_gap > 1e-9 * (1.0 + norm(constraint_center)))
        throw UsageError("concentric_containment: ellipsoid is not concentric with constraint");
    const double support = concentric_support(e, c);
    const double t2 = c.threshold * c.threshold;
    return support <= t2 * (1.0 - Tolerances::global().containment_band);
}

bool ellipsoid_in_capsule(const Ellipsoid& e, const Capsule& c, double lambda) {
    for (const ConcentricConstraint& cc : c.constraints) {
        ConcentricConstraint scaled_cc = cc;
        scaled_cc.threshold *= lambda;
        if (!concentric_containment(e, scaled_cc, c.center)) return false;
    }
    return true;
}

// ---- inscribed ellipsoid ------------------------------------------------------
//
// With every constraint concentric at the capsule center, containment of the
// concentric ellipsoid {u^T A u <= 1} in {u^T M u <= t^2} is equivalent to
// A >= M/t^2 in the Loewner order, so the maximum-volume inscribed ellipsoid
// solves: minimize log det A subject to A >= Q_j, Q_j = M_j / t_j^2.

namespace {

struct QuadConstraint {
    SymMat q;       // M_j / t_j^2
};

bool feasible(const SymMat& a, const std::vector<QuadConstraint>& qs, double tol) {
    for (const QuadConstraint& qc : qs)
        if (!is_psd(a - qc.q, tol)) return false;
    return true;
}

// Grow semiaxis k of A = V diag(vals) V^T as far as feasibility permits:
// replace vals[k] by vals[k] / g^2 for the largest workable g.
// Returns the accepted growth factor.
double grow_axis(SymMat& a, const EigenSym& basis, std::size_t k,
                 const std::vector<QuadConstraint>& qs, double feas_tol) {
    const Vec dir = basis.column(k);
    const SymMat proj = SymMat::outer(dir);
    const double val = basis.values[k];

    auto with_growth = [&](double g) {
        // A - (1 - 1/g^2) * val * dir dir^T
        return a - proj * (val * (1.0 - 1.0 / (g * g)));
    };

    double lo = 1.0;
    double hi = 2.0;
    // expand upper bound while feasible (capped: a 2^40 growth is unbounded in practice)
    int expand = 0;
    while (expand < 40 && feasible(with_growth(hi), qs, feas_tol)) {
        lo = hi;
        hi *= 2.0;
        ++expand;
    }
    if (lo == 1.0) {
        if (!feasible(with_growth(1.0 + 1e-10), qs, feas_tol)) return 1.0;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(with_growth(mid), qs, feas_tol))
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * lo) break;
    }
    if (lo > 1.0) a = with_growth(lo);
    return lo;
}

// Sweeps of per-axis growth in the eigenbasis of the current iterate until the
// relative log-det gain drops below 1e-8. Growing along an eigendirection
// keeps the eigenbasis valid, so it is computed once per sweep.
void axis_ascent(SymMat& a, const std::vector<QuadConstraint>& qs, double feas_tol,
                 std::vector<double>& trace) {
    double prev = log_det_spd(a);
    for (int sweep = 0; sweep < 64; ++sweep) {
        EigenSym basis = eigen_sym(a);
        for (std::size_t k = 0; k < a.dim(); ++k) {
            const double g = grow_axis(a, basis, k, qs, feas_tol);
            if (g > 1.0) basis.values[k] /= g * g;
        }
        const double now = log_det_spd(a);
        trace.push_back(-now);
        if (prev - now < 1e-8 * std::abs(prev) + 1e-14) break;
        prev = now;
    }
}

// Coordinate descent over nonnegative weights of A(w) = sum w_j Q_j, shrinking
// each weight as far as global feasibility allows.
SymMat weight_descent(const std::vector<QuadConstraint>& qs, std::size_t d, double feas_tol) {
    std::vector<double> w(qs.size(), 1.0);
    auto assemble = [&](const std::vector<double>& weights) {
        SymMat a(d);
        for (std::size_t j = 0; j < qs.size(); ++j) a += qs[j].q * weights[j];
        return a;
    };
    for (int pass = 0; pass < 3; ++pass) {
        for (std::size_t j = 0; j < qs.size(); ++j) {
            double lo = 0.0, hi = w[j];
            std::vector<double> trial = w;
            trial[j] = 0.0;
            if (feasible(assemble(trial), qs, feas_tol)) {
                w[j] = 0.0;
                continue;
            }
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                trial[j] = mid;
                if (feasible(assemble(trial), qs, feas_tol))
                    hi = mid;
                else
                    lo = mid;
            }
            w[j] = hi;
        }
    }
    return assemble(w);
}

}  // namespace

InscribedResult inscribed_ellipsoid_detailed(const Capsule& capsule, double lambda) {
    if (lambda <= 0.0) throw UsageError("inscribed_ellipsoid: scale must be positive");
    if (capsule.constraints.empty())
        throw UsageError("inscribed_ellipsoid: capsule has no constraints");
    for (const ConcentricConstraint& c : capsule.constraints)
        if (c.threshold <= 0.0) throw UsageError("inscribed_ellipsoid: degenerate capsule");

    const std::size_t d = capsule.dim();
    const Capsule pr = capsule.pruned();
    const double tb = pr.min_ball_threshold();

    std::vector<const ConcentricConstraint*> cyls;
    for (const ConcentricConstraint& c : pr.constraints)
        if (c.kind == ConcentricConstraint::Kind::Cylinder) cyls.push_back(&c);

    InscribedResult res;

    // Solve at scale 1, then scale the result; this makes
    // inscribed(C, lambda) == inscribed(C, 1).scaled(lambda) exact.
    SymMat a(d);
    if (cyls.empty()) {
        // ball capsule: exact
        a = SymMat::identity(d) * (1.0 / (tb * tb));
        res.log_det_trace.push_back(-log_det_spd(a));
    } else if (cyls.size() == 1) {
        // one cylinder + ball: constraints commute, exact solution
        const Vec& v = cyls[0]->axis;
        const double tc = cyls[0]->threshold;
        a = SymMat(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double vv = v[i] * v[j];
                a(i, j) = ((i == j ? 1.0 : 0.0) - vv) / (tc * tc) + vv / (tb * tb);
            }
        res.log_det_trace.push_back(-log_det_spd(a));
    } else {
        std::vector<QuadConstraint> qs;
        qs.reserve(pr.constraints.size());
        for (const ConcentricConstraint& c : pr.constraints) {
            QuadConstraint qc;
            qc.q = c.matrix(d) * (1.0 / (c.threshold * c.threshold));
            qs.push_back(std::move(qc));
        }
        const double feas_tol = 1e-11;

        // Feasible initializer: the per-segment tensor sum (cylinder part at
        // its own threshold, axis part at the ball threshold).
        SymMat init(d);
        for (const ConcentricConstraint* c : cyls) {
            const double tc2 = c->threshold * c->threshold;
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const double vv = c->axis[i] * c->axis[j];
                    init(i, j) += ((i == j ? 1.0 : 0.0) - vv) / tc2 + vv / (tb * tb);
                }
        }
        // Candidate 1: monotone axis ascent from the tensor-sum initializer.
        SymMat cand1 = init;
        std::vector<double> trace1;
        trace1.push_back(-log_det_spd(cand1));
        axis_ascent(cand1, qs, feas_tol, trace1);

        // Candidate 2: weight-space descent (basis-free), then axis ascent.
        SymMat cand2 = weight_descent(qs, d, feas_tol);
        std::vector<double> trace2;
        trace2.push_back(-log_det_spd(cand2));
        axis_ascent(cand2, qs, feas_tol, trace2);

        // Candidate 1 dominates the initializer by construction, so the pick
        // always has at least the initializer's volume.
        if (log_det_spd(cand2) < log_det_spd(cand1) && feasible(cand2, qs, feas_tol)) {
            a = cand2;
            res.log_det_trace = std::move(trace2);
        } else {
            a = cand1;
            res.log_det_trace = std::move(trace1);
        }
        if (!feasible(a, qs, feas_tol)) {
            a = init;
            res.log_det_trace = {-log_det_spd(init)};
        }
    }

    a.symmetrize();
    res.ellipsoid = Ellipsoid(pr.center, a).scaled(lambda);
    return res;
}

Ellipsoid inscribed_ellipsoid(const Capsule& c, double lambda) {
    return inscribed_ellipsoid_detailed(c, lambda).ellipsoid;
}

std::pair<Ellipsoid, Ellipsoid> proxy_pair(const SegmentSet& s, const Vec& x, double r,
                                           const ScaleConstants& consts) {
    const Capsule c = build_capsule(s, x, r);
    Ellipsoid outer = inscribed_ellipsoid(c, consts.lambda_prime);
    Ellipsoid inner = outer.scaled(consts.lambda_double_prime / consts.lambda_prime);
    return {std::move(outer), std::move(inner)};
}

double min_form_over(const Ellipsoid& e1, const Ellipsoid& e2) {
    check_dims(e1.center(), e2.center(), "min_form_over");
    const std::size_t d = e1.dim();

    // Parametrize e1 as c1 + L u, ||u|| <= 1; minimize (L u + delta)^T A2 (L u + delta).
    const EigenSym& eig = e1.axes();
    SymMat l(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) l(i, k) = eig.vectors(i, k) / std::sqrt(eig.values[k]);

    const Vec delta = sub(e1.center(), e2.center());
    const SymMat& a2 = e2.shape();

    // P = L^T A2 L, b = L^T A2 delta
    SymMat a2l(d);  // A2 * L
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += a2(i, j) * l(j, k);
            a2l(i, k) = s;
        }
    SymMat p(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += l(j, i) * a2l(j, k);
            p(i, k) = s;
        }
    p.symmetrize();
    Vec b(d, 0.0);
    const Vec a2d = a2.mul(delta);
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += l(j, k) * a2d[j];
        b[k] = s;
    }

    const Vec u = min_quadratic_on_ball(p, b);
    return p.quad_form(u) + 2.0 * dot(b, u) + a2.quad_form(delta);
}

Vec project_point(const Ellipsoid& e, const Vec& p) {
    if (e.contains(p)) return p;
    const EigenSym& eig = e.axes();
    const std::size_t d = e.dim();
    const Vec z = sub(p, e.center());
    Vec w(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += eig.vectors(i, k) * z[i];
        w[k] = s;
    }
    // boundary point y_k = w_k / (1 + nu * lam_k); form(nu) decreases in nu
    auto form_of = [&](double nu) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double y = w[k] / (1.0 + nu * eig.values[k]);
            s += eig.values[k] * y * y;
        }
        return s;
    };
    double lo = 0.0, hi = 1.0;
    while (form_of(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (form_of(mid) > 1.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * (1.0 + hi)) break;
    }
    const double nu = hi;
    Vec res = e.center();
    for (std::size_t k = 0; k < d; ++k) {
        const double y = w[k] / (1.0 + nu * eig.values[k]);
        for (std::size_t i = 0; i < d; ++i) res[i] += eig.vectors(i, k) * y;
    }
    return res;
}

bool ellipsoids_disjoint(const Ellipsoid& e1, const Ellipsoid& e2) {
    if (e1.contains(e2.center()) || e2.contains(e1.center())) return false;
    const double m12 = min_form_over(e1, e2);
    if (m12 <= 1.0 + 1e-12) return false;
    const double m21 = min_form_over(e2, e1);
    return m21 > 1.0 + 1e-12;
}

}  // namespace segavd
