#include "xdjdl/dict_learning.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "xdjdl/sparse_coding.hpp"

namespace xdjdl::dl {

namespace {

void check_triplet(const Matrix& X, const Matrix& D, const Matrix& A) {
    if (X.rows() != D.rows()) fail(Err::DimensionMismatch, "data rows do not match atom length");
    if (D.cols() != A.rows()) fail(Err::DimensionMismatch, "atom count does not match code rows");
    if (X.cols() != A.cols()) fail(Err::DimensionMismatch, "sample count does not match code columns");
}

double finite_or_throw(double v, const char* where) {
    if (!std::isfinite(v)) fail(Err::NonFiniteObjective, where);
    return v;
}

Index max_col_nnz(const Matrix& A) {
    Index worst = 0;
    for (Index j = 0; j < A.cols(); ++j) worst = std::max(worst, sc::nnz(A.col(j)));
    return worst;
}

} // namespace

Matrix init_dictionary(const Matrix& X, Index k, Rng& rng) {
    if (k <= 0) fail(Err::InvalidParams, "dictionary size must be positive");
    std::vector<Index> usable;
    usable.reserve(static_cast<std::size_t>(X.cols()));
    for (Index j = 0; j < X.cols(); ++j) {
        if (X.col(j).norm() > 1e-12) usable.push_back(j);
    }
    if (static_cast<Index>(usable.size()) < k)
        fail(Err::TooFewSamples, "fewer usable training columns than requested atoms");

    const auto picks = rng.sample_without_replacement(usable.size(), static_cast<std::size_t>(k));
    Matrix D(X.rows(), k);
    for (Index i = 0; i < k; ++i) {
        const Index src = usable[picks[static_cast<std::size_t>(i)]];
        D.col(i) = X.col(src).normalized();
    }
    return D;
}

Matrix ridge_init_w(const Matrix& A_e, const Matrix& A_p, double lambda) {
    if (A_e.cols() != A_p.cols()) fail(Err::DimensionMismatch, "code matrices disagree on samples");
    if (lambda < 0.0) fail(Err::InvalidParams, "ridge lambda must be nonnegative");

    Matrix G = A_p * A_p.transpose();
    G.diagonal().array() += lambda;
    const Matrix rhs = A_p * A_e.transpose(); // G is symmetric: G W^T = A_p A_e^T

    if (lambda == 0.0) {
        Eigen::FullPivLU<Matrix> lu(G);
        if (!lu.isInvertible())
            fail(Err::SingularSystem, "code Gram matrix is rank-deficient with lambda = 0");
        return lu.solve(rhs).transpose();
    }
    Eigen::LDLT<Matrix> ldlt(G);
    if (ldlt.info() != Eigen::Success)
        fail(Err::SingularSystem, "factorization of the ridge system failed");
    return ldlt.solve(rhs).transpose();
}

void ksvd_atom_update(const Matrix& X, Matrix& D, Matrix& A, Index k) {
    check_triplet(X, D, A);
    if (k < 0 || k >= D.cols()) fail(Err::InvalidParams, "atom index out of range");

    std::vector<Index> users;
    for (Index j = 0; j < A.cols(); ++j) {
        if (A(k, j) != 0.0) users.push_back(j);
    }

    if (users.empty()) {
        // replace dead atom with the worst-reconstructed column; row k stays zero
        Index worst = -1;
        double worst_res = -1.0;
        for (Index j = 0; j < X.cols(); ++j) {
            const double res = (X.col(j) - D * A.col(j)).norm();
            if (res > worst_res) {
                worst_res = res;
                worst = j;
            }
        }
        if (worst >= 0 && X.col(worst).norm() > 1e-12) D.col(k) = X.col(worst).normalized();
        return;
    }

    const Index m = static_cast<Index>(users.size());
    Matrix E(X.rows(), m); // residual with atom k's contribution added back
    for (Index i = 0; i < m; ++i) {
        const Index j = users[static_cast<std::size_t>(i)];
        E.col(i) = X.col(j) - D * A.col(j) + D.col(k) * A(k, j);
    }

    // JacobiSVD, not BDCSVD: the divide-and-conquer deflation in Eigen 3.4 can
    // read out of bounds on some inputs and return NaN in release builds.
    Eigen::JacobiSVD<Matrix> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector u = svd.matrixU().col(0);
    const double sigma = svd.singularValues()[0];
    Vector v = svd.matrixV().col(0);

    Index peak = 0;
    u.cwiseAbs().maxCoeff(&peak);
    const double sign = u[peak] < 0.0 ? -1.0 : 1.0;

    D.col(k) = sign * u;
    for (Index i = 0; i < m; ++i) A(k, users[static_cast<std::size_t>(i)]) = sign * sigma * v[i];
}

void update_subproblem_e(const Matrix& X_e, Matrix& D_e, Matrix& A_e) {
    check_triplet(X_e, D_e, A_e);
    for (Index k = 0; k < D_e.cols(); ++k) ksvd_atom_update(X_e, D_e, A_e, k);
}

void update_subproblem_p(const Matrix& X_p, const Matrix& A_e_star, Matrix& D_p, Matrix& W,
                         Matrix& A_p, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        fail(Err::InvalidParams, "subproblem (ii) requires positive alpha and beta");
    if (X_p.cols() != A_e_star.cols() || X_p.cols() != A_p.cols())
        fail(Err::DimensionMismatch, "sample counts disagree");
    if (D_p.cols() != W.cols() || D_p.cols() != A_p.rows())
        fail(Err::DimensionMismatch, "PPG dictionary, W and codes disagree");
    if (W.rows() != A_e_star.rows()) fail(Err::DimensionMismatch, "W rows do not match ECG codes");

    const double sa = std::sqrt(alpha), sb = std::sqrt(beta);
    Matrix B(X_p.rows() + A_e_star.rows(), X_p.cols());
    B.topRows(X_p.rows()) = sa * X_p;
    B.bottomRows(A_e_star.rows()) = sb * A_e_star;

    Matrix G(D_p.rows() + W.rows(), D_p.cols());
    G.topRows(D_p.rows()) = sa * D_p;
    G.bottomRows(W.rows()) = sb * W;

    for (Index k = 0; k < G.cols(); ++k) ksvd_atom_update(B, G, A_p, k);

    D_p = G.topRows(D_p.rows()) / sa;
    W = G.bottomRows(W.rows()) / sb;
}

void update_subproblem_p_lc(const Matrix& X_p, const Matrix& A_e_star, const Matrix& Q,
                            Matrix& D_p, Matrix& W, Matrix& H, Matrix& A_p, double alpha,
                            double beta, double gamma) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0))
        fail(Err::InvalidParams, "LC subproblem (ii) requires positive alpha, beta, gamma");
    if (Q.cols() != X_p.cols()) fail(Err::DimensionMismatch, "Q columns do not match samples");
    if (H.rows() != Q.rows() || H.cols() != D_p.cols())
        fail(Err::DimensionMismatch, "H shape inconsistent with Q and D_p");

    const double sa = std::sqrt(alpha), sb = std::sqrt(beta), sg = std::sqrt(gamma);
    Matrix B(X_p.rows() + A_e_star.rows() + Q.rows(), X_p.cols());
    B.topRows(X_p.rows()) = sa * X_p;
    B.middleRows(X_p.rows(), A_e_star.rows()) = sb * A_e_star;
    B.bottomRows(Q.rows()) = sg * Q;

    Matrix G(D_p.rows() + W.rows() + H.rows(), D_p.cols());
    G.topRows(D_p.rows()) = sa * D_p;
    G.middleRows(D_p.rows(), W.rows()) = sb * W;
    G.bottomRows(H.rows()) = sg * H;

    for (Index k = 0; k < G.cols(); ++k) ksvd_atom_update(B, G, A_p, k);

    D_p = G.topRows(D_p.rows()) / sa;
    W = G.middleRows(D_p.rows(), W.rows()) / sb;
    H = G.bottomRows(H.rows()) / sg;
}

Matrix build_q_matrix(const std::vector<int>& labels, Index class_count, Index ones_per_class) {
    if (class_count <= 0 || ones_per_class <= 0)
        fail(Err::InvalidParams, "class_count and ones_per_class must be positive");
    const Index r = class_count * ones_per_class;
    Matrix Q = Matrix::Zero(r, static_cast<Index>(labels.size()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
        const int lab = labels[j];
        if (lab < 0 || lab >= class_count) fail(Err::LabelOutOfRange, "label outside [0, class_count)");
        Q.block(Index(lab) * ones_per_class, static_cast<Index>(j), ones_per_class, 1).setOnes();
    }
    return Q;
}

double objective(const Matrix& X_e, const Matrix& X_p, const Matrix& D_e, const Matrix& D_p,
                 const Matrix& W, const Matrix& A_e, const Matrix& A_p, double alpha, double beta) {
    check_triplet(X_e, D_e, A_e);
    check_triplet(X_p, D_p, A_p);
    if (W.rows() != A_e.rows() || W.cols() != A_p.rows())
        fail(Err::DimensionMismatch, "W shape inconsistent with the code matrices");
    const double fit_e = (X_e - D_e * A_e).squaredNorm();
    const double fit_p = (X_p - D_p * A_p).squaredNorm();
    const double map = (A_e - W * A_p).squaredNorm();
    return fit_e + alpha * fit_p + beta * map;
}

double objective_lc(const Matrix& X_e, const Matrix& X_p, const Matrix& Q, const Matrix& D_e,
                    const Matrix& D_p, const Matrix& W, const Matrix& H, const Matrix& A_e,
                    const Matrix& A_p, double alpha, double beta, double gamma) {
    if (Q.cols() != A_p.cols() || H.rows() != Q.rows() || H.cols() != A_p.rows())
        fail(Err::DimensionMismatch, "Q/H shapes inconsistent with codes");
    return objective(X_e, X_p, D_e, D_p, W, A_e, A_p, alpha, beta) +
           gamma * (Q - H * A_p).squaredNorm();
}

double objective(const XdjdlModel& model, const Matrix& X_e, const Matrix& X_p, const Matrix& A_e,
                 const Matrix& A_p) {
    return objective(X_e, X_p, model.D_e, model.D_p, model.W, A_e, A_p, model.hyper.alpha,
                     model.hyper.beta);
}

double objective(const LcXdjdlModel& model, const Matrix& X_e, const Matrix& X_p,
                 const Matrix& A_e, const Matrix& A_p, const Matrix& Q) {
    return objective_lc(X_e, X_p, Q, model.base.D_e, model.base.D_p, model.base.W, model.H, A_e,
                        A_p, model.base.hyper.alpha, model.base.hyper.beta,
                        model.base.hyper.gamma);
}

Matrix assemble_stacked_dictionary(const Matrix& D_e, const Matrix& D_p, const Matrix& W,
                                   double alpha, double beta) {
    const Index d = D_e.rows();
    const Index k_e = D_e.cols();
    const Index k_p = D_p.cols();
    if (D_p.rows() != d) fail(Err::DimensionMismatch, "dictionaries disagree on cycle length");
    if (W.rows() != k_e || W.cols() != k_p) fail(Err::DimensionMismatch, "W shape inconsistent");

    const double sa = std::sqrt(alpha), sb = std::sqrt(beta);
    Matrix D = Matrix::Zero(2 * d + k_e, k_e + k_p);
    D.block(0, 0, d, k_e) = D_e;
    D.block(d, k_e, d, k_p) = sa * D_p;
    D.block(2 * d, 0, k_e, k_e) = -sb * Matrix::Identity(k_e, k_e);
    D.block(2 * d, k_e, k_e, k_p) = sb * W;
    return D;
}

Matrix assemble_stacked_data(const Matrix& X_e, const Matrix& X_p, double alpha,
                             Index extra_zero_rows) {
    if (X_e.rows() != X_p.rows() || X_e.cols() != X_p.cols())
        fail(Err::DimensionMismatch, "paired training matrices disagree");
    Matrix X = Matrix::Zero(2 * X_e.rows() + extra_zero_rows, X_e.cols());
    X.topRows(X_e.rows()) = X_e;
    X.middleRows(X_e.rows(), X_p.rows()) = std::sqrt(alpha) * X_p;
    return X;
}

namespace {

struct TrainState {
    Matrix A_e, A_p;
};

// Shared coding stage: assemble, normalize a copy, code, rescale rows back.
TrainState joint_code_stage(const Matrix& X_stack, Matrix D_stack, const HyperParams& hyper) {
    const Vector scales = normalize_columns(D_stack);
    const JointSparsityBounds bounds{hyper.k_e, hyper.t_e, hyper.k_p, hyper.t_p};
    Matrix A = sc::joint_sparse_code(D_stack, X_stack, bounds).coeffs;
    for (Index row = 0; row < A.rows(); ++row) {
        if (scales[row] > 0.0) A.row(row) /= scales[row];
    }
    TrainState st;
    st.A_e = A.topRows(hyper.k_e);
    st.A_p = A.bottomRows(hyper.k_p);
    return st;
}

void validate_training_inputs(const Matrix& X_e, const Matrix& X_p, const HyperParams& hyper) {
    hyper.validate();
    if (X_e.rows() != X_p.rows() || X_e.cols() != X_p.cols())
        fail(Err::DimensionMismatch, "paired training matrices disagree");
    if (X_e.cols() < std::max(hyper.k_e, hyper.k_p))
        fail(Err::TooFewSamples, "need at least max(k_e, k_p) training cycles");
    if (!(hyper.alpha > 0.0) || !(hyper.beta > 0.0))
        fail(Err::InvalidParams, "training requires positive alpha and beta");
}

} // namespace

XdjdlModel train_xdjdl(const Matrix& X_e, const Matrix& X_p, const HyperParams& hyper) {
    validate_training_inputs(X_e, X_p, hyper);

    Rng rng(hyper.seed);
    XdjdlModel model;
    model.hyper = hyper;
    model.D_e = init_dictionary(X_e, hyper.k_e, rng);
    model.D_p = init_dictionary(X_p, hyper.k_p, rng);

    Matrix A_e = sc::omp_batch(model.D_e, X_e, hyper.t_e).coeffs;
    Matrix A_p = sc::omp_batch(model.D_p, X_p, hyper.t_p).coeffs;
    model.W = ridge_init_w(A_e, A_p, hyper.ridge_lambda);

    double obj = finite_or_throw(objective(model, X_e, X_p, A_e, A_p), "initial objective");
    model.trace.push_back(obj);

    const Matrix X_stack = assemble_stacked_data(X_e, X_p, hyper.alpha, hyper.k_e);

    for (int it = 0; it < hyper.max_iters; ++it) {
        const Matrix D_stack =
            assemble_stacked_dictionary(model.D_e, model.D_p, model.W, hyper.alpha, hyper.beta);
        TrainState st = joint_code_stage(X_stack, D_stack, hyper);
        model.diag.max_nnz_e.push_back(max_col_nnz(st.A_e));
        model.diag.max_nnz_p.push_back(max_col_nnz(st.A_p));

        model.diag.stage_e_before.push_back((X_e - model.D_e * st.A_e).squaredNorm());
        update_subproblem_e(X_e, model.D_e, st.A_e);
        model.diag.stage_e_after.push_back((X_e - model.D_e * st.A_e).squaredNorm());

        auto stage_p = [&](const TrainState& s) {
            return hyper.alpha * (X_p - model.D_p * s.A_p).squaredNorm() +
                   hyper.beta * (s.A_e - model.W * s.A_p).squaredNorm();
        };
        model.diag.stage_p_before.push_back(stage_p(st));
        update_subproblem_p(X_p, st.A_e, model.D_p, model.W, st.A_p, hyper.alpha, hyper.beta);
        model.diag.stage_p_after.push_back(stage_p(st));

        const double obj_new =
            finite_or_throw(objective(model, X_e, X_p, st.A_e, st.A_p), "iteration objective");
        model.trace.push_back(obj_new);

        const bool converged = std::abs(obj_new - obj) < hyper.rel_tol * std::max(obj, 1e-30);
        obj = obj_new;
        if (converged) break;
    }
    return model;
}

LcXdjdlModel train_lc_xdjdl(const Matrix& X_e, const Matrix& X_p, const std::vector<int>& labels,
                            Index class_count, Index ones_per_class, const HyperParams& hyper) {
    validate_training_inputs(X_e, X_p, hyper);
    if (static_cast<Index>(labels.size()) != X_e.cols())
        fail(Err::DimensionMismatch, "labels length does not match sample count");
    if (!(hyper.gamma > 0.0)) fail(Err::InvalidParams, "LC training requires positive gamma");

    const Matrix Q = build_q_matrix(labels, class_count, ones_per_class);
    const double sg = std::sqrt(hyper.gamma);

    Rng rng(hyper.seed);
    LcXdjdlModel lc;
    lc.class_count = class_count;
    lc.ones_per_class = ones_per_class;
    XdjdlModel& model = lc.base;
    model.hyper = hyper;
    model.D_e = init_dictionary(X_e, hyper.k_e, rng);
    model.D_p = init_dictionary(X_p, hyper.k_p, rng);

    Matrix A_e = sc::omp_batch(model.D_e, X_e, hyper.t_e).coeffs;
    Matrix A_p = sc::omp_batch(model.D_p, X_p, hyper.t_p).coeffs;
    model.W = ridge_init_w(A_e, A_p, hyper.ridge_lambda);
    lc.H = ridge_init_w(Q, A_p, hyper.ridge_lambda);

    double obj = finite_or_throw(objective(lc, X_e, X_p, A_e, A_p, Q), "initial objective");
    model.trace.push_back(obj);

    Matrix X_stack(2 * X_e.rows() + hyper.k_e + Q.rows(), X_e.cols());
    X_stack.topRows(2 * X_e.rows() + hyper.k_e) =
        assemble_stacked_data(X_e, X_p, hyper.alpha, hyper.k_e);
    X_stack.bottomRows(Q.rows()) = sg * Q;

    for (int it = 0; it < hyper.max_iters; ++it) {
        const Matrix D_base =
            assemble_stacked_dictionary(model.D_e, model.D_p, model.W, hyper.alpha, hyper.beta);
        Matrix D_stack = Matrix::Zero(D_base.rows() + Q.rows(), D_base.cols());
        D_stack.topRows(D_base.rows()) = D_base;
        D_stack.bottomRightCorner(Q.rows(), hyper.k_p) = sg * lc.H;

        TrainState st = joint_code_stage(X_stack, D_stack, hyper);
        model.diag.max_nnz_e.push_back(max_col_nnz(st.A_e));
        model.diag.max_nnz_p.push_back(max_col_nnz(st.A_p));

        model.diag.stage_e_before.push_back((X_e - model.D_e * st.A_e).squaredNorm());
        update_subproblem_e(X_e, model.D_e, st.A_e);
        model.diag.stage_e_after.push_back((X_e - model.D_e * st.A_e).squaredNorm());

        auto stage_p = [&](const TrainState& s) {
            return hyper.alpha * (X_p - model.D_p * s.A_p).squaredNorm() +
                   hyper.beta * (s.A_e - model.W * s.A_p).squaredNorm() +
                   hyper.gamma * (Q - lc.H * s.A_p).squaredNorm();
        };
        model.diag.stage_p_before.push_back(stage_p(st));
        update_subproblem_p_lc(X_p, st.A_e, Q, model.D_p, model.W, lc.H, st.A_p, hyper.alpha,
                               hyper.beta, hyper.gamma);
        model.diag.stage_p_after.push_back(stage_p(st));

        const double obj_new =
            finite_or_throw(objective(lc, X_e, X_p, st.A_e, st.A_p, Q), "iteration objective");
        model.trace.push_back(obj_new);

        const bool converged = std::abs(obj_new - obj) < hyper.rel_tol * std::max(obj, 1e-30);
        obj = obj_new;
        if (converged) break;
    }
    return lc;
}

} // namespace xdjdl::dl
