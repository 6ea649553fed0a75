#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "xdjdl/types.hpp"

namespace xdjdl::synth {

struct Wave {
    double amplitude = 0;
    double center = 0; // fraction of the beat period, strictly increasing P..T
    double width = 0;  // gaussian sigma, fraction of the beat period
};

struct EcgTemplateParams {
    std::array<Wave, 5> waves{ // P, Q, R, S, T
        Wave{0.18, 0.24, 0.020},
        Wave{-0.25, 0.36, 0.010},
        Wave{1.00, 0.40, 0.010},
        Wave{-0.30, 0.44, 0.010},
        Wave{0.35, 0.68, 0.032},
    };
    double hr_bpm = 60.0;
    double hr_jitter_pct = 0.0; // per-beat period jitter, fraction of the period
    double noise_std = 0.0;
    double ppg_offset_s = 0.2;  // pulse onset delay after the matching R peak
    std::uint64_t seed = 0;

    void validate() const;
};

struct FiducialTruth {
    std::vector<std::size_t> p, q, r, s, t; // sample indices per beat
    std::vector<std::size_t> onsets;        // PPG onsets
    double pr_s = 0, qrs_s = 0, qt_s = 0;   // params-implied intervals at nominal HR
};

struct SyntheticRecord {
    RawRecord record;
    FiducialTruth truth;
};

// Paired ECG/PPG record: gaussian-bump PQRST beats plus an asymmetric
// fast-rise/slow-decay pulse whose onset trails each R peak by ppg_offset_s.
SyntheticRecord gen_synthetic_record(double duration_s, double fs, const EcgTemplateParams& params);

struct PlantedModel {
    Matrix D_e, D_p;   // unit columns; orthonormal when k <= d
    Matrix W;          // k_e x k_p
    Matrix A_p;        // planted codes, <= t_p nonzeros per column
    Matrix X_e, X_p;   // exactly D_e*W*A_p and D_p*A_p
    std::vector<int> labels; // empty when class_count == 0
};

// Exactly generative sparse model. Every ECG code W*A_p(:,j) has <= t_e
// nonzeros by construction (each W column touches one ECG atom). With
// class_count >= 2 the atom pools are class-disjoint and labels round-robin.
PlantedModel gen_planted_model(Index d, Index k_e, Index k_p, Index t_e, Index t_p, Index n,
                               Index class_count, std::uint64_t seed);

// Exhaustive least squares over all supports of size <= t. Global optimum;
// exact ties resolve to the lexicographically smaller support. Guards the
// enumeration at 1e6 supports.
Vector brute_force_sparse_oracle(const Matrix& D, const Vector& x, Index t);

} // namespace xdjdl::synth
