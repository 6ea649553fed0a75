#include "xdjdl/inference.hpp"

#include <cmath>

#include "xdjdl/dict_learning.hpp"
#include "xdjdl/sparse_coding.hpp"

namespace xdjdl::infer {

namespace {

// OMP against a dictionary that is not plainly column-normalized: selection
// runs on a normalized copy, coefficients are mapped back to the original
// column scale afterwards (identical least-squares fit on the same support).
Matrix code_with_rescale(const Matrix& D, const Matrix& X, Index t) {
    Matrix Dn = D;
    const Vector scales = normalize_columns(Dn);
    Matrix A = sc::omp_batch(Dn, X, t).coeffs;
    for (Index row = 0; row < A.rows(); ++row) {
        if (scales[row] > 0.0) A.row(row) /= scales[row];
    }
    return A;
}

} // namespace

InferResult infer_ecg(const XdjdlModel& model, const Matrix& T_p) {
    if (T_p.rows() != model.D_p.rows())
        fail(Err::DimensionMismatch, "test cycles do not match the PPG dictionary");
    InferResult out;
    out.p_codes.sparsity_bound = model.hyper.t_p;
    out.p_codes.coeffs = code_with_rescale(model.D_p, T_p, model.hyper.t_p);
    out.recon = model.D_e * (model.W * out.p_codes.coeffs);
    return out;
}

InferResult infer_ecg_lc(const LcXdjdlModel& model, const Matrix& T_p, const Matrix& Q_test) {
    const XdjdlModel& base = model.base;
    if (T_p.rows() != base.D_p.rows())
        fail(Err::DimensionMismatch, "test cycles do not match the PPG dictionary");
    if (Q_test.cols() != T_p.cols())
        fail(Err::DimensionMismatch, "Q_test columns do not match test cycles");
    if (Q_test.rows() != model.H.rows())
        fail(Err::DimensionMismatch, "Q_test rows do not match H");

    const double sg = std::sqrt(base.hyper.gamma);
    Matrix D_stack(base.D_p.rows() + model.H.rows(), base.D_p.cols());
    D_stack.topRows(base.D_p.rows()) = base.D_p;
    D_stack.bottomRows(model.H.rows()) = sg * model.H;

    Matrix X_stack(T_p.rows() + Q_test.rows(), T_p.cols());
    X_stack.topRows(T_p.rows()) = T_p;
    X_stack.bottomRows(Q_test.rows()) = sg * Q_test;

    InferResult out;
    out.p_codes.sparsity_bound = base.hyper.t_p;
    out.p_codes.coeffs = code_with_rescale(D_stack, X_stack, base.hyper.t_p);
    out.recon = base.D_e * (base.W * out.p_codes.coeffs);
    return out;
}

Vector align_r_peak_offset(const Vector& ref, const Vector& rec) {
    if (ref.size() != rec.size()) fail(Err::DimensionMismatch, "cycle lengths differ");
    const Index d = ref.size();
    if (d == 0) return rec;
    Index r_ref = 0, r_rec = 0;
    ref.maxCoeff(&r_ref);
    rec.maxCoeff(&r_rec);
    const Index shift = r_ref - r_rec;
    Vector out(d);
    for (Index i = 0; i < d; ++i) {
        Index j = (i + shift) % d;
        if (j < 0) j += d;
        out[j] = rec[i];
    }
    return out;
}

Matrix dct_matrix(Index d) {
    if (d <= 0) fail(Err::InvalidParams, "transform size must be positive");
    Matrix M(d, d);
    const double pi = 3.14159265358979323846;
    const double s0 = std::sqrt(1.0 / double(d));
    const double s = std::sqrt(2.0 / double(d));
    for (Index i = 0; i < d; ++i) {
        const double scale = i == 0 ? s0 : s;
        for (Index j = 0; j < d; ++j) {
            M(i, j) = scale * std::cos(pi * (double(j) + 0.5) * double(i) / double(d));
        }
    }
    return M;
}

DctBaseline train_dct_baseline(const Matrix& X_e, const Matrix& X_p, double ridge) {
    if (X_e.rows() != X_p.rows() || X_e.cols() != X_p.cols())
        fail(Err::DimensionMismatch, "paired training matrices disagree");
    if (X_e.cols() < 1) fail(Err::TooFewSamples, "need at least one training pair");
    const Matrix M = dct_matrix(X_e.rows());
    DctBaseline out;
    out.ridge = ridge;
    out.W_dct = dl::ridge_init_w(M * X_e, M * X_p, ridge);
    return out;
}

Matrix infer_dct_baseline(const DctBaseline& baseline, const Matrix& T_p) {
    if (T_p.rows() != baseline.W_dct.cols())
        fail(Err::DimensionMismatch, "test cycles do not match the DCT map");
    const Matrix M = dct_matrix(T_p.rows());
    return M.transpose() * (baseline.W_dct * (M * T_p));
}

} // namespace xdjdl::infer
