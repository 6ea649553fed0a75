#pragma once

#include "xdjdl/types.hpp"

namespace xdjdl::sc {

// Orthogonal matching pursuit for one signal. D must have unit-norm columns
// (zero columns are skipped during selection). Greedy pick by |<r, d_j>| with
// lower-index wins on ties within 1e-12; after each pick the coefficients are
// re-fit by least squares on the whole support; stops early once the residual
// l2 norm drops below 1e-12 or no atom correlates with the residual.
Vector omp(const Matrix& D, const Vector& x, Index t);

// Column-wise OMP. Returns a k x n code matrix with <= t nonzeros per column.
SparseCode omp_batch(const Matrix& D, const Matrix& X, Index t);

// Joint coding over a stacked dictionary whose first k_e code rows belong to
// the ECG block and the remaining k_p rows to the PPG block. Runs OMP with the
// global bound t_e + t_p, then zeroes the smallest-magnitude surplus nonzeros
// inside each block (equal magnitudes: higher index dropped first). No re-fit
// after zeroing.
SparseCode joint_sparse_code(const Matrix& D_joint, const Matrix& X_joint,
                             const JointSparsityBounds& bounds);

Index nnz(const Eigen::Ref<const Vector>& v, double tol = 0.0);

} // namespace xdjdl::sc
