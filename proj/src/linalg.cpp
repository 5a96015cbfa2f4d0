#include "segavd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace segavd {

EigenSym eigen_sym(const SymMat& m, double offdiag_tol) {
    const std::size_t d = m.dim();
    SymMat a = m;
    a.symmetrize();
    SymMat v = SymMat::identity(d);

    const double scale = std::max(a.max_abs(), 1e-300);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= offdiag_tol * scale) break;

        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    EigenSym res;
    res.values.resize(d);
    for (std::size_t i = 0; i < d; ++i) res.values[i] = a(i, i);

    // sort ascending, permuting eigenvector columns accordingly
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return res.values[x] < res.values[y]; });
    EigenSym sorted;
    sorted.values.resize(d);
    sorted.vectors = SymMat(d);
    for (std::size_t k = 0; k < d; ++k) {
        sorted.values[k] = res.values[order[k]];
        for (std::size_t i = 0; i < d; ++i) sorted.vectors(i, k) = v(i, order[k]);
    }
    return sorted;
}

bool is_psd(const SymMat& m, double tol) {
    const std::size_t d = m.dim();
    const double slack = tol * std::max(m.max_abs(), 1e-300);
    SymMat l(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s < -slack) return false;
                l(i, i) = std::sqrt(std::max(s, 0.0));
            } else {
                l(i, j) = (l(j, j) > 0.0) ? s / l(j, j) : 0.0;
            }
        }
    }
    return true;
}

SymMat cholesky(const SymMat& m) {
    const std::size_t d = m.dim();
    SymMat l(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw UsageError("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

Vec solve_spd(const SymMat& m, const Vec& b) {
    const SymMat l = cholesky(m);
    const std::size_t d = m.dim();
    Vec y(d), x(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = d; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < d; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

SymMat inverse_spd(const SymMat& m) {
    const std::size_t d = m.dim();
    SymMat inv(d);
    for (std::size_t j = 0; j < d; ++j) {
        Vec e(d, 0.0);
        e[j] = 1.0;
        Vec col = solve_spd(m, e);
        for (std::size_t i = 0; i < d; ++i) inv(i, j) = col[i];
    }
    inv.symmetrize();
    return inv;
}

double log_det_spd(const SymMat& m) {
    const SymMat l = cholesky(m);
    double s = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

Vec min_quadratic_on_ball(const SymMat& p, const Vec& b) {
    const std::size_t d = p.dim();

    // Unconstrained minimizer first.
    Vec x = solve_spd(p, scaled(b, -1.0));
    if (norm2(x) <= 1.0) return x;

    // Boundary case: (P + nu I) x = -b with ||x|| = 1, nu > 0.
    const EigenSym eig = eigen_sym(p);
    Vec beta(d);
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += eig.vectors(i, k) * b[i];
        beta[k] = s;
    }

    auto norm2_of = [&](double nu) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double q = beta[k] / (eig.values[k] + nu);
            s += q * q;
        }
        return s;
    };

    double lo = 0.0;
    double hi = std::max(1.0, norm(b));  // ||x(nu)|| <= ||b||/nu, so nu = ||b|| gives ||x|| <= 1
    while (norm2_of(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (norm2_of(mid) > 1.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * (1.0 + hi)) break;
    }
    const double nu = 0.5 * (lo + hi);

    Vec u(d);
    for (std::size_t k = 0; k < d; ++k) u[k] = -beta[k] / (eig.values[k] + nu);
    Vec res(d, 0.0);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i) res[i] += eig.vectors(i, k) * u[k];
    // Normalize onto the boundary to absorb the secular-equation tolerance.
    const double nn = norm(res);
    if (nn > 0.0)
        for (double& t : res) t /= nn;
    return res;
}

}  // namespace segavd
