#ifndef FEYNKNOT_CORE_HPP
#define FEYNKNOT_CORE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace feynknot {

using complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kFourPi = 4.0 * kPi;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double px, double py, double pz) : x(px), y(py), z(pz) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
        return *this / n;
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Rotation about the z-axis by angle `theta`.
inline Vec3 rotate_z(const Vec3& v, double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

/// Orthonormal tangent frame at a unit vector `n`. The first frame vector is
/// built from the coordinate axis of largest |component| projected out, the
/// second closes a right-handed triple (t1, t2, n).
struct TangentFrame {
    Vec3 t1, t2;
};

inline TangentFrame tangent_frame(const Vec3& n) {
    double ax = std::fabs(n.x), ay = std::fabs(n.y), az = std::fabs(n.z);
    Vec3 seed;
    if (ax >= ay && ax >= az)
        seed = {0.0, 1.0, 0.0};
    else if (ay >= az)
        seed = {0.0, 0.0, 1.0};
    else
        seed = {1.0, 0.0, 0.0};
    Vec3 t1 = (seed - n * seed.dot(n)).normalized();
    Vec3 t2 = n.cross(t1);
    return {t1, t2};
}

// ---------------------------------------------------------------------------
// Dense matrices just large enough for this project. Configuration-space
// Jacobians stay below ~20x20 and the bundle matrices below ~10x10, so plain
// row-major storage with LU / Jacobi kernels is all that is needed.
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// Determinant by LU with partial pivoting; input by value.
inline double det(Matrix m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("det: square matrix required");
    int n = m.rows();
    double d = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(m(r, c)) > std::fabs(m(piv, c))) piv = r;
        if (m(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
            d = -d;
        }
        d *= m(c, c);
        for (int r = c + 1; r < n; ++r) {
            double f = m(r, c) / m(c, c);
            for (int j = c; j < n; ++j) m(r, j) -= f * m(c, j);
        }
    }
    return d;
}

/// Solve m x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix m, std::vector<double> b) {
    int n = m.rows();
    if (m.cols() != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve: dimension mismatch");
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(m(r, c)) > std::fabs(m(piv, c))) piv = r;
        if (m(piv, c) == 0.0) throw std::domain_error("solve: singular matrix");
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
            std::swap(b[piv], b[c]);
        }
        for (int r = c + 1; r < n; ++r) {
            double f = m(r, c) / m(c, c);
            for (int j = c; j < n; ++j) m(r, j) -= f * m(c, j);
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < n; ++j) s -= m(r, j) * x[j];
        x[r] = s / m(r, r);
    }
    return x;
}

class CMatrix {
public:
    CMatrix() = default;
    CMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    complex& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
    const complex& operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

    CMatrix adjoint() const {
        CMatrix m(cols_, rows_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
        return m;
    }

    CMatrix operator*(const CMatrix& o) const {
        if (cols_ != o.rows_) throw std::invalid_argument("cmatrix multiply: shape mismatch");
        CMatrix m(rows_, o.cols_);
        for (int r = 0; r < rows_; ++r)
            for (int k = 0; k < cols_; ++k) {
                complex v = (*this)(r, k);
                if (v == complex{}) continue;
                for (int c = 0; c < o.cols_; ++c) m(r, c) += v * o(k, c);
            }
        return m;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<complex> a_;
};

inline complex det(CMatrix m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("det: square matrix required");
    int n = m.rows();
    complex d = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
        if (m(piv, c) == complex{}) return {};
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
            d = -d;
        }
        d *= m(c, c);
        for (int r = c + 1; r < n; ++r) {
            complex f = m(r, c) / m(c, c);
            for (int j = c; j < n; ++j) m(r, j) -= f * m(c, j);
        }
    }
    return d;
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi sweeps. Returns the
/// eigenvalues in ascending order.
inline std::vector<double> hermitian_eigenvalues(CMatrix a) {
    int n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("hermitian_eigenvalues: square matrix required");
    double scale = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) scale = std::max(scale, std::abs(a(r, c)));
    if (scale == 0.0) return std::vector<double>(n, 0.0);
    const double tol = 1e-15 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= tol) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                complex apq = a(p, q);
                double mag = std::abs(apq);
                if (mag <= tol) continue;
                complex phase = apq / mag;
                double app = a(p, p).real(), aqq = a(q, q).real();
                double tau = (aqq - app) / (2.0 * mag);
                double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                complex s = t * c * phase;
                // A <- J^H A J with J the (p,q) rotation
                for (int k = 0; k < n; ++k) {
                    complex akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - std::conj(s) * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    complex apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = std::conj(s) * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a(i, i).real();
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Smallest singular value of (possibly rectangular) `m`, via the Gram matrix.
inline double smallest_singular_value(const CMatrix& m) {
    CMatrix gram = m.adjoint() * m;
    auto ev = hermitian_eigenvalues(gram);
    double lo = ev.empty() ? 0.0 : ev.front();
    return lo > 0.0 ? std::sqrt(lo) : 0.0;
}

}  // namespace feynknot

#endif
