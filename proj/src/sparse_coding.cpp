#include "xdjdl/sparse_coding.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <vector>

namespace xdjdl::sc {

namespace {

constexpr double residual_eps = 1e-12;
constexpr double tie_eps = 1e-12;

// Keep the `bound` largest-magnitude nonzeros inside rows [begin, begin+len),
// zero the rest. Equal magnitudes drop the higher index first. No re-fit.
void enforce_block_bound(Vector& a, Index begin, Index len, Index bound) {
    std::vector<std::pair<double, Index>> entries; // (|value|, index)
    for (Index i = begin; i < begin + len; ++i) {
        if (a[i] != 0.0) entries.emplace_back(std::abs(a[i]), i);
    }
    const Index surplus = static_cast<Index>(entries.size()) - bound;
    if (surplus <= 0) return;
    std::sort(entries.begin(), entries.end(), [](const auto& lhs, const auto& rhs) {
        if (lhs.first != rhs.first) return lhs.first < rhs.first;
        return lhs.second > rhs.second;
    });
    for (Index z = 0; z < surplus; ++z) a[entries[static_cast<std::size_t>(z)].second] = 0.0;
}

} // namespace

Index nnz(const Eigen::Ref<const Vector>& v, double tol) {
    Index count = 0;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > tol) ++count;
    }
    return count;
}

Vector omp(const Matrix& D, const Vector& x, Index t) {
    const Index m = D.rows();
    const Index k = D.cols();
    if (x.size() != m) fail(Err::DimensionMismatch, "signal length does not match atom length");
    if (t <= 0) fail(Err::InvalidParams, "sparsity target must be positive");
    if (t > k) fail(Err::SparsityExceedsAtoms, "sparsity target exceeds atom count");

    Vector a = Vector::Zero(k);
    Vector r = x;
    if (r.norm() < residual_eps) return a;

    std::vector<Index> support;
    support.reserve(static_cast<std::size_t>(t));
    std::vector<char> in_support(static_cast<std::size_t>(k), 0);
    Matrix D_s(m, t);

    for (Index iter = 0; iter < t; ++iter) {
        Index best = -1;
        double best_corr = 0.0;
        for (Index j = 0; j < k; ++j) {
            if (in_support[static_cast<std::size_t>(j)]) continue;
            const double c = std::abs(D.col(j).dot(r));
            if (best < 0 || c > best_corr + tie_eps) {
                best = j;
                best_corr = c;
            }
        }
        if (best < 0 || best_corr <= residual_eps) break; // residual orthogonal to all atoms

        in_support[static_cast<std::size_t>(best)] = 1;
        support.push_back(best);
        D_s.col(iter) = D.col(best);

        const auto cols = D_s.leftCols(iter + 1);
        const Vector coef = cols.householderQr().solve(x);
        r = x - cols * coef;
        for (std::size_t s = 0; s < support.size(); ++s) a[support[s]] = coef[static_cast<Index>(s)];

        if (r.norm() < residual_eps) break;
    }
    return a;
}

SparseCode omp_batch(const Matrix& D, const Matrix& X, Index t) {
    if (X.rows() != D.rows()) fail(Err::DimensionMismatch, "signal rows do not match atom length");
    SparseCode code;
    code.sparsity_bound = t;
    code.coeffs = Matrix::Zero(D.cols(), X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        code.coeffs.col(j) = omp(D, X.col(j), t);
    }
    return code;
}

SparseCode joint_sparse_code(const Matrix& D_joint, const Matrix& X_joint,
                             const JointSparsityBounds& bounds) {
    bounds.validate();
    if (D_joint.cols() != bounds.k_e + bounds.k_p)
        fail(Err::DimensionMismatch, "stacked dictionary width is not k_e + k_p");
    if (X_joint.rows() != D_joint.rows())
        fail(Err::DimensionMismatch, "stacked data rows do not match stacked dictionary");

    const Index t_total = bounds.t_e + bounds.t_p;
    SparseCode code;
    code.sparsity_bound = t_total;
    code.coeffs = Matrix::Zero(D_joint.cols(), X_joint.cols());
    for (Index j = 0; j < X_joint.cols(); ++j) {
        Vector a = omp(D_joint, X_joint.col(j), t_total);
        enforce_block_bound(a, 0, bounds.k_e, bounds.t_e);
        enforce_block_bound(a, bounds.k_e, bounds.k_p, bounds.t_p);
        code.coeffs.col(j) = a;
    }
    return code;
}

} // namespace xdjdl::sc
