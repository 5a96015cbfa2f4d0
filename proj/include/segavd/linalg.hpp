#pragma once

#include <cstddef>
#include <vector>

#include "segavd/common.hpp"

namespace segavd {

/// Dense symmetric d x d matrix (row-major, full storage). Dimensions here are
/// tiny (d <= 8), so all algorithms below are direct and deterministic.
class SymMat {
public:
    SymMat() = default;
    explicit SymMat(std::size_t d) : d_(d), a_(d * d, 0.0) {}

    static SymMat identity(std::size_t d) {
        SymMat m(d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    /// v v^T for a vector v.
    static SymMat outer(const Vec& v) {
        SymMat m(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[i] * v[j];
        return m;
    }

    std::size_t dim() const { return d_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * d_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }

    SymMat& operator+=(const SymMat& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }

    SymMat& operator*=(double s) {
        for (double& x : a_) x *= s;
        return *this;
    }

    friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
    friend SymMat operator-(const SymMat& a, const SymMat& b) {
        SymMat r(a.d_);
        for (std::size_t i = 0; i < a.a_.size(); ++i) r.a_[i] = a.a_[i] - b.a_[i];
        return r;
    }
    friend SymMat operator*(SymMat a, double s) { return a *= s; }

    /// x^T M x.
    double quad_form(const Vec& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < d_; ++j) row += a_[i * d_ + j] * x[j];
            s += x[i] * row;
        }
        return s;
    }

    Vec mul(const Vec& x) const {
        Vec y(d_, 0.0);
        for (std::size_t i = 0; i < d_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d_; ++j) s += a_[i * d_ + j] * x[j];
            y[i] = s;
        }
        return y;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : a_) m = std::max(m, std::abs(x));
        return m;
    }

    double max_sym_defect() const {
        double m = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i + 1; j < d_; ++j)
                m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
        return m;
    }

    void symmetrize() {
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i + 1; j < d_; ++j) {
                const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = v;
                (*this)(j, i) = v;
            }
    }

private:
    std::size_t d_ = 0;
    std::vector<double> a_;
};

/// Eigendecomposition of a symmetric matrix: M = V diag(values) V^T,
/// eigenvectors in columns of V, eigenvalues ascending.
struct EigenSym {
    Vec values;
    SymMat vectors;  // column k = eigenvector for values[k]

    Vec column(std::size_t k) const {
        Vec v(values.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors(i, k);
        return v;
    }
};

/// Cyclic Jacobi iteration; converges when the off-diagonal mass drops below
/// `offdiag_tol` relative to the matrix scale.
EigenSym eigen_sym(const SymMat& m, double offdiag_tol = Tolerances::global().jacobi_offdiag);

/// True iff M is positive semidefinite up to `tol` (attempted Cholesky with a
/// diagonal slack of tol * scale). Much cheaper than a full eigendecomposition.
bool is_psd(const SymMat& m, double tol = 1e-12);

/// Cholesky factor L with M = L L^T; throws UsageError if not positive definite.
SymMat cholesky(const SymMat& m);

/// Solve M x = b for symmetric positive definite M.
Vec solve_spd(const SymMat& m, const Vec& b);

/// Inverse of a symmetric positive definite matrix.
SymMat inverse_spd(const SymMat& m);

/// log(det(M)) for symmetric positive definite M.
double log_det_spd(const SymMat& m);

/// Minimize x^T P x + 2 b^T x over the unit ball ||x|| <= 1 for P symmetric
/// positive definite. Exact trust-region subproblem via the secular equation.
/// Returns the minimizing point.
Vec min_quadratic_on_ball(const SymMat& p, const Vec& b);

}  // namespace segavd
