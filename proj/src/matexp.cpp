#include "cdmtt/matexp.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <string>

namespace cdmtt::matexp {

namespace {

void check_square(const Matrix& m, const char* name) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw InvalidInput(std::string(name) + " must be a non-empty square matrix");
}

void check_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) throw InvalidInput(std::string(name) + " has non-finite entries");
}

void check_duration(double t) {
    if (!(t >= 0.0)) throw InvalidInput("integration horizon must be non-negative");
}

}  // namespace

Matrix expm(const Matrix& m) {
    check_square(m, "expm argument");
    check_finite(m, "expm argument");
    Matrix out = m.exp();
    if (!out.allFinite()) throw NumericalError("matrix exponential overflowed");
    return out;
}

Matrix vanloan_type1(const Matrix& a, const Matrix& b, double t) {
    check_square(a, "A");
    check_duration(t);
    if (b.rows() != a.rows()) throw InvalidInput("B must have as many rows as A");
    check_finite(b, "B");
    const Eigen::Index n = a.rows();
    const Eigen::Index p = b.cols();
    if (t == 0.0) return Matrix::Zero(n, p);

    Matrix h = Matrix::Zero(n + p, n + p);
    h.topLeftCorner(n, n) = a;
    h.topRightCorner(n, p) = b;
    return expm(h * t).topRightCorner(n, p);
}

Matrix vanloan_type2(const Matrix& a, const Matrix& qc, double t) {
    check_square(a, "A");
    check_square(qc, "Qc");
    check_duration(t);
    if (qc.rows() != a.rows()) throw InvalidInput("Qc must match the order of A");
    check_finite(qc, "Qc");
    const double scale = std::max(1.0, qc.cwiseAbs().maxCoeff());
    if ((qc - qc.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidInput("Qc must be symmetric");
    const Eigen::Index n = a.rows();
    if (t == 0.0) return Matrix::Zero(n, n);

    Matrix h = Matrix::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n) = -a;
    h.topRightCorner(n, n) = qc;
    h.bottomRightCorner(n, n) = a.transpose();
    const Matrix e = expm(h * t);
    const Matrix g1 = e.topRightCorner(n, n);
    const Matrix f2 = e.bottomRightCorner(n, n);
    return symmetrize(f2.transpose() * g1);
}

Matrix vanloan_type3_block(const Matrix& b, const Matrix& qc, const Matrix& a, double t) {
    check_square(b, "B");
    check_square(qc, "Qc");
    check_square(a, "A");
    check_duration(t);
    const Eigen::Index n = b.rows();
    if (qc.rows() != n || a.rows() != n)
        throw InvalidInput("B, Qc and A must share the same order");
    check_finite(qc, "Qc");
    if (t == 0.0) return Matrix::Zero(n, n);

    Matrix h = Matrix::Zero(3 * n, 3 * n);
    h.block(0, 0, n, n) = -b;
    h.block(0, n, n, n) = qc;
    h.block(n, 2 * n, n, n) = Matrix::Identity(n, n);
    h.block(2 * n, 2 * n, n, n) = a;
    return expm(h * t).block(0, 2 * n, n, n);
}

Matrix vanloan_type3(const Matrix& b, const Matrix& qc, const Matrix& a, double t) {
    const Matrix h3 = vanloan_type3_block(b, qc, a, t);
    if (t == 0.0) return h3;
    return expm(b * t) * h3;
}

}  // namespace cdmtt::matexp
