#pragma once

#include <optional>
#include <vector>

#include "xdjdl/types.hpp"

namespace xdjdl::ev {

// Pearson correlation; DegenerateInput when either argument has std <= 1e-12.
double pearson(const Vector& x, const Vector& y);

// ||x - xhat|| / ||x||; DegenerateInput when ||x|| <= 1e-12.
double rrmse(const Vector& x, const Vector& xhat);

struct Fiducials {
    std::optional<Index> p, q, r, s, t;
    bool complete() const { return p && q && r && s && t; }
    bool ordered() const { return complete() && *p < *q && *q < *r && *r < *s && *s < *t; }
};

// Windowed extrema around the global argmax R: Q = min in (R-80ms, R),
// S = min in (R, R+80ms), P = max in [start, Q), T = max in (S+40ms, S+400ms).
// Windows are clipped to the cycle; an empty window, or a candidate that is
// not a local extremum interior to its window, yields an absent point.
Fiducials detect_fiducials(const Vector& cycle, double fs_effective);

struct SubwaveRanges {
    Index p_begin = 0, p_end = 0;     // half-open [begin, end)
    Index qrs_begin = 0, qrs_end = 0; // half-open
    Index t_begin = 0, t_end = 0;     // half-open
};

// Partition of a beat span of cycle_len samples into P / QRS / T around the
// detected q and s: P = [left, q), QRS = [q, s], T = (s, right], where
// left/right bracket the beat at r -/+ the ratio split of the span. Requires
// q, r, s (MissingFiducials otherwise). Ranges are contiguous and disjoint.
SubwaveRanges split_subwaves(Index cycle_len, const Fiducials& fid, double ratio = 0.6);

// Border between two beats: r_prev + round(ratio * rr_span) samples.
Index subwave_border(Index r_prev, Index rr_span, double ratio = 0.6);

struct Intervals {
    std::optional<double> pr, qrs, qt; // seconds
};

Intervals intervals(const Fiducials& fid, double fs_effective);

struct IntervalMae {
    std::optional<double> pr, qrs, qt;
    std::size_t used_pr = 0, used_qrs = 0, used_qt = 0;
    std::size_t excluded = 0;
};

// Mean absolute difference per interval type over index-aligned cycle pairs;
// a pair contributes to a type only when both sides measured it.
IntervalMae interval_mae(const std::vector<Intervals>& ref, const std::vector<Intervals>& rec);

struct Aggregate {
    double mean = 0, stddev = 0, median = 0;
};

struct EvalReport {
    std::vector<double> rho;          // per evaluated cycle
    std::vector<double> rrmse;
    std::vector<int> excluded;        // 1 = degenerate cycle, skipped from aggregates
    Aggregate rho_agg, rrmse_agg;

    // beat-centered (60/40 re-split) diagnostics
    std::vector<int> effective;       // per span: both sides gave a full ordered set
    double effective_ratio = 0;
    std::size_t spans_evaluated = 0;
    std::optional<Aggregate> rho_p, rho_qrs, rho_t;       // subwave correlation
    std::optional<Aggregate> rrmse_p, rrmse_qrs, rrmse_t;
    IntervalMae mae;
    std::vector<Intervals> ref_intervals, rec_intervals;  // per span

    std::size_t n_cycles = 0;
    std::size_t n_excluded = 0;
    std::size_t n_effective = 0;
};

struct EvalOptions {
    double split_ratio = 0.6;                 // beat border position in the R-R span
    std::vector<double> fs_effective_per_cycle; // optional, overrides the scalar
};

// R_e = reconstructed cycles, T_e = reference cycles, column-aligned.
// Per-cycle rho/rrmse on the raw columns; fiducial, subwave and interval
// statistics on beat-centered spans stitched from adjacent cycles (reference
// fiducials drive the subwave split). fs_effective is the sample rate of the
// resampled cycles (d samples per original cycle duration).
EvalReport evaluate_batch(const Matrix& R_e, const Matrix& T_e, double fs_effective,
                          const EvalOptions& opts = {});

Aggregate aggregate(const std::vector<double>& values);

} // namespace xdjdl::ev
