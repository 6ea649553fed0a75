#include "xdjdl/types.hpp"

#include <cmath>

namespace xdjdl {

bool has_unit_columns(const Matrix& m, double tol) {
    for (Index j = 0; j < m.cols(); ++j) {
        if (std::abs(m.col(j).norm() - 1.0) > tol) return false;
    }
    return true;
}

Vector normalize_columns(Matrix& m, double tiny) {
    Vector norms(m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        const double nrm = m.col(j).norm();
        if (nrm > tiny) {
            m.col(j) /= nrm;
            norms[j] = nrm;
        } else {
            norms[j] = 0.0;
        }
    }
    return norms;
}

void HyperParams::validate() const {
    if (k_e <= 0 || k_p <= 0) fail(Err::InvalidParams, "dictionary sizes must be positive");
    if (t_e <= 0 || t_p <= 0) fail(Err::InvalidParams, "sparsity targets must be positive");
    if (t_e > k_e) fail(Err::SparsityExceedsAtoms, "t_e exceeds k_e");
    if (t_p > k_p) fail(Err::SparsityExceedsAtoms, "t_p exceeds k_p");
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
        fail(Err::InvalidParams, "alpha, beta, gamma must be nonnegative");
    if (!(ridge_lambda >= 0.0)) fail(Err::InvalidParams, "ridge_lambda must be nonnegative");
    if (max_iters <= 0) fail(Err::InvalidParams, "max_iters must be positive");
    if (!(rel_tol >= 0.0)) fail(Err::InvalidParams, "rel_tol must be nonnegative");
}

bool stacked_p_columns_unit(const Matrix& D_p, const Matrix& W, double alpha, double beta,
                            double tol) {
    if (D_p.cols() != W.cols()) return false;
    for (Index j = 0; j < D_p.cols(); ++j) {
        const double sq = alpha * D_p.col(j).squaredNorm() + beta * W.col(j).squaredNorm();
        if (std::abs(std::sqrt(sq) - 1.0) > tol) return false;
    }
    return true;
}

void CyclePairSet::validate() const {
    if (ppg.rows() != ecg.rows() || ppg.cols() != ecg.cols())
        fail(Err::ShapeMismatch, "ppg/ecg cycle matrices disagree");
    if (!labels.empty() && static_cast<Index>(labels.size()) != n())
        fail(Err::ShapeMismatch, "labels length does not match cycle count");
    if (!src_len.empty() && static_cast<Index>(src_len.size()) != n())
        fail(Err::ShapeMismatch, "src_len length does not match cycle count");
    for (Index j = 0; j < n(); ++j) {
        for (const Matrix* m : {&ppg, &ecg}) {
            const auto col = m->col(j);
            const double mean = col.mean();
            if (std::abs(mean) > 1e-9) fail(Err::DegenerateCycle, "cycle mean is not zero");
            if (d() > 1) {
                const double sd = std::sqrt((col.array() - mean).square().sum() / double(d() - 1));
                if (std::abs(sd - 1.0) > 1e-6) fail(Err::DegenerateCycle, "cycle std is not one");
            }
        }
    }
}

} // namespace xdjdl
