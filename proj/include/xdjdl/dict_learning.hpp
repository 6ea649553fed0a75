#pragma once

#include <optional>

#include "xdjdl/rng.hpp"
#include "xdjdl/types.hpp"

namespace xdjdl::dl {

// k distinct training columns, chosen uniformly without replacement and
// l2-normalized. Columns with norm <= 1e-12 are not eligible.
Matrix init_dictionary(const Matrix& X, Index k, Rng& rng);

// Ridge closed form W = A_e A_p^T (A_p A_p^T + lambda I)^-1. lambda == 0 is
// allowed and raises SingularSystem when the Gram matrix is rank-deficient.
Matrix ridge_init_w(const Matrix& A_e, const Matrix& A_p, double lambda);

// One K-SVD atom update on column k of D, in place. Coefficient row k of A is
// rewritten on its existing support only (zero pattern preserved). An atom used
// by no column is replaced by the currently worst-reconstructed training
// column, normalized; coefficients untouched.
void ksvd_atom_update(const Matrix& X, Matrix& D, Matrix& A, Index k);

// Subproblem (i): one ascending K-SVD pass over all atoms of D_e against X_e.
void update_subproblem_e(const Matrix& X_e, Matrix& D_e, Matrix& A_e);

// Subproblem (ii): one K-SVD pass treating [sqrt(alpha) D_p ; sqrt(beta) W]
// as a single dictionary against [sqrt(alpha) X_p ; sqrt(beta) A_e_star].
// After it, every stacked column has unit l2 norm.
void update_subproblem_p(const Matrix& X_p, const Matrix& A_e_star, Matrix& D_p, Matrix& W,
                         Matrix& A_p, double alpha, double beta);

// Label-consistent flavor of subproblem (ii): appends sqrt(gamma) H / sqrt(gamma) Q
// blocks to the stack.
void update_subproblem_p_lc(const Matrix& X_p, const Matrix& A_e_star, const Matrix& Q,
                            Matrix& D_p, Matrix& W, Matrix& H, Matrix& A_p, double alpha,
                            double beta, double gamma);

// Discriminative target: r = class_count * ones_per_class rows, column j has
// ones exactly in the block of rows belonging to labels[j].
Matrix build_q_matrix(const std::vector<int>& labels, Index class_count, Index ones_per_class);

double objective(const Matrix& X_e, const Matrix& X_p, const Matrix& D_e, const Matrix& D_p,
                 const Matrix& W, const Matrix& A_e, const Matrix& A_p, double alpha, double beta);

double objective_lc(const Matrix& X_e, const Matrix& X_p, const Matrix& Q, const Matrix& D_e,
                    const Matrix& D_p, const Matrix& W, const Matrix& H, const Matrix& A_e,
                    const Matrix& A_p, double alpha, double beta, double gamma);

double objective(const XdjdlModel& model, const Matrix& X_e, const Matrix& X_p, const Matrix& A_e,
                 const Matrix& A_p);

double objective(const LcXdjdlModel& model, const Matrix& X_e, const Matrix& X_p,
                 const Matrix& A_e, const Matrix& A_p, const Matrix& Q);

// Stacked single-system view of the coupled objective; used by tests to check
// structural equivalence with the decomposed form and by training internals.
Matrix assemble_stacked_dictionary(const Matrix& D_e, const Matrix& D_p, const Matrix& W,
                                   double alpha, double beta);
Matrix assemble_stacked_data(const Matrix& X_e, const Matrix& X_p, double alpha,
                             Index extra_zero_rows);

XdjdlModel train_xdjdl(const Matrix& X_e, const Matrix& X_p, const HyperParams& hyper);

LcXdjdlModel train_lc_xdjdl(const Matrix& X_e, const Matrix& X_p, const std::vector<int>& labels,
                            Index class_count, Index ones_per_class, const HyperParams& hyper);

} // namespace xdjdl::dl
