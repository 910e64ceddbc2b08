#pragma once

#include "cdmtt/types.hpp"

/// Matrix exponential and the block-matrix (Van Loan) integral primitives.
///
/// Every closed form used for discretizing linear SDEs reduces to one of the
/// three integrals below. Each is evaluated by exponentiating an augmented
/// block matrix and slicing the relevant block out of the result.
namespace cdmtt::matexp {

/// exp(M) by scaling and squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& m);

/// \f$ \int_0^t \exp(A\tau) B \, d\tau \f$ for A (n x n) and B (n x p).
Matrix vanloan_type1(const Matrix& a, const Matrix& b, double t);

/// \f$ \int_0^t \exp(A\tau) Q_c \exp(A^T\tau) \, d\tau \f$, symmetrized.
Matrix vanloan_type2(const Matrix& a, const Matrix& qc, double t);

/// \f$ \int_0^t \exp(B\tau) Q_c [\int_0^\tau \exp(A r)\,dr] \, d\tau \f$.
/// Computed as exp(Bt) H3(t), with H3 the top-right block of exp(Hc3 t).
Matrix vanloan_type3(const Matrix& b, const Matrix& qc, const Matrix& a, double t);

/// The raw top-right block H3(t) of exp(Hc3 t) used by vanloan_type3.
Matrix vanloan_type3_block(const Matrix& b, const Matrix& qc, const Matrix& a, double t);

}  // namespace cdmtt::matexp
