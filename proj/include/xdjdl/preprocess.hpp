#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "xdjdl/types.hpp"

namespace xdjdl::pre {

// Smoothness-priors detrend: subtracts the low-frequency trend
// (I + lambda^2 D2^T D2)^-1 x, D2 = second-difference operator. Linear in x;
// needs at least 3 samples.
std::vector<double> detrend(const std::vector<double>& x, double lambda);

// QRS detector: 5-15 Hz band-pass (first-order difference-equation filters
// designed from fs), derivative, squaring, 150 ms moving-window integration,
// adaptive threshold with a 250 ms refractory; each detection is refined to
// the local signal argmax. Expects a detrended input.
std::vector<std::size_t> detect_r_peaks(const std::vector<double>& ecg, double fs);

// Pulse onset detector: one onset per beat, the local minimum immediately
// preceding the maximal upslope of that beat.
std::vector<std::size_t> detect_ppg_onsets(const std::vector<double>& ppg, double fs);

struct RawCyclePair {
    std::vector<double> ppg;
    std::vector<double> ecg;
};

// Cut both signals at consecutive R-peak indices; cycles outside
// [0.25 s, 2.0 s] are dropped.
std::vector<RawCyclePair> segment_r2r(const std::vector<double>& ppg,
                                      const std::vector<double>& ecg,
                                      const std::vector<std::size_t>& r_peaks, double fs);

// Cut one signal at consecutive onset indices, same length filter.
std::vector<std::vector<double>> segment_o2o(const std::vector<double>& ppg,
                                             const std::vector<std::size_t>& onsets, double fs);

// Linear interpolation onto d uniformly spaced points across the cycle.
std::vector<double> resample_cycle(const std::vector<double>& cycle, Index d);

// Zero mean, unit sample standard deviation. DegenerateCycle when std <= 1e-12.
std::vector<double> normalize_cycle(const std::vector<double>& cycle);

struct BuildOptions {
    Index d = 300;
    double smoothing = 300.0;   // detrend lambda
    std::string mode = "r2r";   // "r2r" | "o2o"
};

struct BuildResult {
    CyclePairSet cycles;
    std::size_t skipped_degenerate = 0;
};

// Full pipeline over one or more records: detrend both channels, detect cut
// points (R peaks, or PPG onsets in o2o mode), segment both signals at the
// same indices, resample to d, per-cycle normalize. Degenerate cycles are
// skipped and counted. Optional per-record labels broadcast to that record's
// surviving cycles.
BuildResult build_dataset(const std::vector<RawRecord>& records, const BuildOptions& opts,
                          const std::vector<int>* record_labels = nullptr);

} // namespace xdjdl::pre
