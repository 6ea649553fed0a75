#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "xdjdl/errors.hpp"

namespace xdjdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Dictionary with unit-l2 columns. The struct itself is a plain carrier; the
// unit-norm contract is checked where it matters (OMP entry points, model
// assembly) via has_unit_columns().
struct Dictionary {
    Matrix atoms; // d x k

    Index dim() const { return atoms.rows(); }
    Index size() const { return atoms.cols(); }
};

bool has_unit_columns(const Matrix& m, double tol = 1e-9);

// Normalize columns in place; returns the original column norms. Columns with
// norm <= tiny are left untouched and report scale 0 so callers can exclude
// them from atom selection.
Vector normalize_columns(Matrix& m, double tiny = 1e-12);

struct SparseCode {
    Matrix coeffs;        // k x n, at most `sparsity_bound` nonzeros per column
    Index sparsity_bound = 0;
};

struct JointSparsityBounds {
    Index k_e = 0; // rows 0..k_e-1 of a stacked code: ECG block
    Index t_e = 0;
    Index k_p = 0; // rows k_e..k_e+k_p-1: PPG block
    Index t_p = 0;

    void validate() const {
        if (k_e <= 0 || k_p <= 0) fail(Err::InvalidParams, "joint bounds need positive block sizes");
        if (t_e <= 0 || t_p <= 0) fail(Err::InvalidParams, "joint bounds need positive sparsity targets");
        if (t_e > k_e) fail(Err::SparsityExceedsAtoms, "t_e exceeds ECG block size");
        if (t_p > k_p) fail(Err::SparsityExceedsAtoms, "t_p exceeds PPG block size");
    }
};

struct HyperParams {
    Index k_e = 320;
    Index k_p = 9000;
    Index t_e = 10;
    Index t_p = 10;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;       // label-consistency weight, used by the LC variant only
    double ridge_lambda = 1e-3;
    int max_iters = 30;
    double rel_tol = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-iteration training diagnostics kept in memory (not persisted):
// stage objectives straddling each dictionary-update subproblem and the
// largest per-column nonzero counts seen in the joint coding stage.
struct TrainDiagnostics {
    std::vector<double> stage_e_before, stage_e_after;
    std::vector<double> stage_p_before, stage_p_after;
    std::vector<Index> max_nnz_e, max_nnz_p;
};

struct XdjdlModel {
    Matrix D_e; // d x k_e, unit columns
    Matrix D_p; // d x k_p; unit-norm only jointly with W (see stacked_p_columns_unit)
    Matrix W;   // k_e x k_p
    HyperParams hyper;
    std::vector<double> trace; // objective after init and after each iteration
    TrainDiagnostics diag;

    Index dim() const { return D_e.rows(); }
};

struct LcXdjdlModel {
    XdjdlModel base;
    Matrix H;                // r x k_p, r = class_count * ones_per_class
    Index class_count = 0;
    Index ones_per_class = 1;
};

// True iff every stacked column [sqrt(alpha)*d_p_j ; sqrt(beta)*w_j] has unit norm.
bool stacked_p_columns_unit(const Matrix& D_p, const Matrix& W, double alpha, double beta,
                            double tol = 1e-9);

struct RawRecord {
    std::vector<double> ppg;
    std::vector<double> ecg;
    double fs = 0.0; // Hz
};

// Temporally aligned, resampled, per-cycle normalized PPG/ECG pairs.
struct CyclePairSet {
    Matrix ppg; // d x n
    Matrix ecg; // d x n
    double fs = 0.0;          // original record sample rate
    std::string mode = "r2r"; // "r2r" or "o2o"
    std::vector<int> labels;   // optional, size n when present
    std::vector<int> src_len;  // optional raw cycle lengths before resampling

    Index d() const { return ppg.rows(); }
    Index n() const { return ppg.cols(); }
    void validate() const;
};

} // namespace xdjdl
