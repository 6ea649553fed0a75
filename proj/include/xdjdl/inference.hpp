#pragma once

#include "xdjdl/types.hpp"

namespace xdjdl::infer {

struct InferResult {
    Matrix recon;        // d x m reconstructed ECG cycles
    SparseCode p_codes;  // k_p x m source codes (original dictionary scale)
};

// Testing path: code each PPG cycle under D_p with bound t_p, map through W,
// synthesize with D_e. D_p columns are rescaled internally for the greedy
// selection; returned codes are in D_p's own scale.
InferResult infer_ecg(const XdjdlModel& model, const Matrix& T_p);

// Label-consistent testing path: codes the stacked [cycle ; sqrt(gamma) q]
// vector under [D_p ; sqrt(gamma) H] with bound t_p.
InferResult infer_ecg_lc(const LcXdjdlModel& model, const Matrix& T_p, const Matrix& Q_test);

// Circularly shift `rec` so its global argmax lines up with the reference's.
Vector align_r_peak_offset(const Vector& ref, const Vector& rec);

struct DctBaseline {
    Matrix W_dct;     // d x d map between DCT coefficient vectors
    double ridge = 0; // lambda used at fit time
};

// Linear map between orthonormal DCT-II coefficients of paired cycles,
// fit with the same ridge closed form as the dictionary path.
DctBaseline train_dct_baseline(const Matrix& X_e, const Matrix& X_p, double ridge);

Matrix infer_dct_baseline(const DctBaseline& baseline, const Matrix& T_p);

// Orthonormal DCT-II matrix (d x d); transform is M*x, inverse M^T*x.
Matrix dct_matrix(Index d);

} // namespace xdjdl::infer
