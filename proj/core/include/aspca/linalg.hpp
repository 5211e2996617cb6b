#pragma once

#include "aspca/types.hpp"

namespace aspca {

// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
struct EigenPairs {
  Vector values;
  Matrix vectors;  // column k pairs with values(k)
};

// Symmetric eigendecomposition with a deterministic sign convention: the
// largest-magnitude entry of every eigenvector is positive (ties go to the
// lowest index). Throws if the symmetry residual exceeds 1e-10 * max(1, |A|_max).
EigenPairs sym_eigen(const Matrix& a);

// Flip `v` so that its largest-magnitude entry is positive.
void normalize_sign(Eigen::Ref<Vector> v);

// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double sym_spectral_norm(const Matrix& a);

// Largest singular value of an arbitrary matrix.
double spectral_norm(const Matrix& a);

// max |A^T A - I| entrywise.
double gram_residual(const Matrix& frame);

Matrix principal_submatrix(const Matrix& a, const Indices& idx);

// Complement of `idx` in {0, ..., dim-1}; `idx` must be sorted.
Indices complement(const Indices& idx, int dim);

// Lift a vector defined on coordinates `idx` back into R^dim with zeros elsewhere.
Vector zero_pad(const Vector& v, const Indices& idx, int dim);

}  // namespace aspca
