#include "xdjdl/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace xdjdl::ev {

namespace {

double centered_norm(const Vector& x, double mean) {
    double ss = 0.0;
    for (Index i = 0; i < x.size(); ++i) ss += (x[i] - mean) * (x[i] - mean);
    return std::sqrt(ss);
}

double sample_std(const Vector& x) {
    if (x.size() < 2) return 0.0;
    const double m = x.mean();
    return centered_norm(x, m) / std::sqrt(double(x.size() - 1));
}

Index argmax_first(const Vector& x, Index lo, Index hi) { // closed range
    Index best = lo;
    for (Index i = lo + 1; i <= hi; ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

Index argmin_first(const Vector& x, Index lo, Index hi) {
    Index best = lo;
    for (Index i = lo + 1; i <= hi; ++i)
        if (x[i] < x[best]) best = i;
    return best;
}

bool interior_local_min(const Vector& x, Index i) {
    return i > 0 && i + 1 < x.size() && x[i - 1] >= x[i] && x[i + 1] >= x[i];
}

bool interior_local_max(const Vector& x, Index i) {
    return i > 0 && i + 1 < x.size() && x[i - 1] <= x[i] && x[i + 1] <= x[i];
}

std::optional<double> safe_pearson(const Vector& x, const Vector& y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    if (sample_std(x) <= 1e-12 || sample_std(y) <= 1e-12) return std::nullopt;
    return pearson(x, y);
}

std::optional<double> safe_rrmse(const Vector& x, const Vector& xhat) {
    if (x.size() != xhat.size() || x.size() == 0) return std::nullopt;
    if (x.norm() <= 1e-12) return std::nullopt;
    return rrmse(x, xhat);
}

std::optional<Aggregate> maybe_aggregate(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return aggregate(v);
}

} // namespace

double pearson(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) fail(Err::DimensionMismatch, "pearson inputs differ in length");
    if (x.size() < 2) fail(Err::DegenerateInput, "pearson needs at least 2 samples");
    const double mx = x.mean(), my = y.mean();
    const double nx = centered_norm(x, mx), ny = centered_norm(y, my);
    const double n1 = std::sqrt(double(x.size() - 1));
    if (nx / n1 <= 1e-12 || ny / n1 <= 1e-12)
        fail(Err::DegenerateInput, "pearson undefined for (near) constant input");
    double dot = 0.0;
    for (Index i = 0; i < x.size(); ++i) dot += (x[i] - mx) * (y[i] - my);
    return dot / (nx * ny);
}

double rrmse(const Vector& x, const Vector& xhat) {
    if (x.size() != xhat.size()) fail(Err::DimensionMismatch, "rrmse inputs differ in length");
    const double nx = x.norm();
    if (nx <= 1e-12) fail(Err::DegenerateInput, "rrmse undefined for (near) zero reference");
    return (x - xhat).norm() / nx;
}

Fiducials detect_fiducials(const Vector& cycle, double fs_effective) {
    if (!(fs_effective > 0.0)) fail(Err::InvalidParams, "fs_effective must be positive");
    const Index d = cycle.size();
    if (d == 0) fail(Err::DegenerateInput, "empty cycle");

    const auto w80 = static_cast<Index>(std::llround(0.080 * fs_effective));
    const auto w40 = static_cast<Index>(std::llround(0.040 * fs_effective));
    const auto w400 = static_cast<Index>(std::llround(0.400 * fs_effective));

    Fiducials fid;
    const Index r = argmax_first(cycle, 0, d - 1);
    fid.r = r;

    { // Q: minimum in (R - 80 ms, R)
        const Index lo = std::max<Index>(0, r - w80 + 1), hi = r - 1;
        if (lo <= hi) {
            const Index q = argmin_first(cycle, lo, hi);
            if (interior_local_min(cycle, q)) fid.q = q;
        }
    }
    { // S: minimum in (R, R + 80 ms)
        const Index lo = r + 1, hi = std::min<Index>(d - 1, r + w80 - 1);
        if (lo <= hi) {
            const Index s = argmin_first(cycle, lo, hi);
            if (interior_local_min(cycle, s)) fid.s = s;
        }
    }
    if (fid.q) { // P: maximum in [start, Q)
        const Index lo = 0, hi = *fid.q - 1;
        if (lo <= hi) {
            const Index p = argmax_first(cycle, lo, hi);
            if (interior_local_max(cycle, p)) fid.p = p;
        }
    }
    if (fid.s) { // T: maximum in (S + 40 ms, S + 400 ms)
        const Index lo = *fid.s + w40 + 1, hi = std::min<Index>(d - 1, *fid.s + w400 - 1);
        if (lo <= hi && lo < d) {
            const Index t = argmax_first(cycle, lo, hi);
            if (interior_local_max(cycle, t)) fid.t = t;
        }
    }
    return fid;
}

Index subwave_border(Index r_prev, Index rr_span, double ratio) {
    return r_prev + static_cast<Index>(std::llround(ratio * double(rr_span)));
}

SubwaveRanges split_subwaves(Index cycle_len, const Fiducials& fid, double ratio) {
    if (!(fid.q && fid.r && fid.s)) fail(Err::MissingFiducials, "split needs q, r, s");
    if (cycle_len < 2 || !(ratio > 0.0 && ratio < 1.0)) fail(Err::InvalidParams, "bad split arguments");
    const Index q = *fid.q, r = *fid.r, s = *fid.s;
    if (!(q < r && r < s) || s >= cycle_len) fail(Err::MissingFiducials, "fiducials out of order");

    const auto b = static_cast<Index>(std::llround(ratio * double(cycle_len)));
    Index left = std::max<Index>(0, r - (cycle_len - b));
    Index right = std::min<Index>(cycle_len - 1, r + b);
    left = std::min(left, q);
    right = std::max(right, s);

    SubwaveRanges out;
    out.p_begin = left;
    out.p_end = q;
    out.qrs_begin = q;
    out.qrs_end = s + 1;
    out.t_begin = s + 1;
    out.t_end = right + 1;
    return out;
}

Intervals intervals(const Fiducials& fid, double fs_effective) {
    if (!(fs_effective > 0.0)) fail(Err::InvalidParams, "fs_effective must be positive");
    Intervals out;
    if (fid.p && fid.r && *fid.p < *fid.r) out.pr = double(*fid.r - *fid.p) / fs_effective;
    if (fid.q && fid.s && *fid.q < *fid.s) out.qrs = double(*fid.s - *fid.q) / fs_effective;
    if (fid.q && fid.t && *fid.q < *fid.t) out.qt = double(*fid.t - *fid.q) / fs_effective;
    return out;
}

IntervalMae interval_mae(const std::vector<Intervals>& ref, const std::vector<Intervals>& rec) {
    if (ref.size() != rec.size()) fail(Err::DimensionMismatch, "interval lists differ in length");
    IntervalMae out;
    double acc_pr = 0, acc_qrs = 0, acc_qt = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        bool any = false;
        if (ref[i].pr && rec[i].pr) { acc_pr += std::abs(*ref[i].pr - *rec[i].pr); ++out.used_pr; any = true; }
        if (ref[i].qrs && rec[i].qrs) { acc_qrs += std::abs(*ref[i].qrs - *rec[i].qrs); ++out.used_qrs; any = true; }
        if (ref[i].qt && rec[i].qt) { acc_qt += std::abs(*ref[i].qt - *rec[i].qt); ++out.used_qt; any = true; }
        if (!any) ++out.excluded;
    }
    if (out.used_pr + out.used_qrs + out.used_qt == 0)
        fail(Err::EmptyAfterExclusion, "no cycle pair had a commonly measured interval");
    if (out.used_pr) out.pr = acc_pr / double(out.used_pr);
    if (out.used_qrs) out.qrs = acc_qrs / double(out.used_qrs);
    if (out.used_qt) out.qt = acc_qt / double(out.used_qt);
    return out;
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) fail(Err::EmptyDataset, "nothing to aggregate");
    Aggregate out;
    const std::size_t n = values.size();
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / double(n - 1));
    }
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    out.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return out;
}

EvalReport evaluate_batch(const Matrix& R_e, const Matrix& T_e, double fs_effective,
                          const EvalOptions& opts) {
    if (R_e.rows() != T_e.rows() || R_e.cols() != T_e.cols())
        fail(Err::DimensionMismatch, "reconstruction/reference shapes differ");
    const Index d = T_e.rows(), m = T_e.cols();
    if (m == 0 || d == 0) fail(Err::EmptyDataset, "nothing to evaluate");
    if (!(fs_effective > 0.0)) fail(Err::InvalidParams, "fs_effective must be positive");
    if (!opts.fs_effective_per_cycle.empty() &&
        opts.fs_effective_per_cycle.size() != static_cast<std::size_t>(m))
        fail(Err::ShapeMismatch, "per-cycle rates must match the cycle count");

    EvalReport rep;
    rep.n_cycles = static_cast<std::size_t>(m);
    rep.excluded.assign(static_cast<std::size_t>(m), 0);

    std::vector<double> rho_ok, rrmse_ok;
    for (Index j = 0; j < m; ++j) {
        const Vector ref = T_e.col(j), rec = R_e.col(j);
        const bool degenerate =
            sample_std(ref) <= 1e-12 || sample_std(rec) <= 1e-12 || ref.norm() <= 1e-12;
        if (degenerate) {
            rep.excluded[static_cast<std::size_t>(j)] = 1;
            ++rep.n_excluded;
            rep.rho.push_back(std::numeric_limits<double>::quiet_NaN());
            rep.rrmse.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double rho = pearson(ref, rec);
        const double rr = rrmse(ref, rec);
        rep.rho.push_back(rho);
        rep.rrmse.push_back(rr);
        rho_ok.push_back(rho);
        rrmse_ok.push_back(rr);
    }
    if (rho_ok.empty()) fail(Err::EmptyDataset, "every cycle was excluded as degenerate");
    rep.rho_agg = aggregate(rho_ok);
    rep.rrmse_agg = aggregate(rrmse_ok);

    const auto fs_of = [&](Index j) {
        return opts.fs_effective_per_cycle.empty()
                   ? fs_effective
                   : opts.fs_effective_per_cycle[static_cast<std::size_t>(j)];
    };

    // beat-centered spans: tail of cycle i-1 ++ head of cycle i, R near ratio'd border
    const auto b = static_cast<Index>(std::llround(opts.split_ratio * double(d)));
    std::vector<double> rp, rq, rt, ep, eq, et;
    for (Index i = 1; i < m; ++i) {
        rep.ref_intervals.emplace_back();
        rep.rec_intervals.emplace_back();
        rep.effective.push_back(0);
        ++rep.spans_evaluated;
        if (rep.excluded[static_cast<std::size_t>(i - 1)] || rep.excluded[static_cast<std::size_t>(i)])
            continue;

        Vector ref_span(d), rec_span(d);
        ref_span.head(d - b) = T_e.col(i - 1).tail(d - b);
        ref_span.tail(b) = T_e.col(i).head(b);
        rec_span.head(d - b) = R_e.col(i - 1).tail(d - b);
        rec_span.tail(b) = R_e.col(i).head(b);

        const double fs_span = 0.5 * (fs_of(i - 1) + fs_of(i));
        const Fiducials fr = detect_fiducials(ref_span, fs_span);
        const Fiducials fc = detect_fiducials(rec_span, fs_span);
        if (!(fr.ordered() && fc.ordered())) continue;

        rep.effective.back() = 1;
        ++rep.n_effective;
        rep.ref_intervals.back() = intervals(fr, fs_span);
        rep.rec_intervals.back() = intervals(fc, fs_span);

        const SubwaveRanges sr = split_subwaves(d, fr, opts.split_ratio);
        const auto push = [&](Index beg, Index end, std::vector<double>& rhos,
                              std::vector<double>& errs) {
            const Index len = end - beg;
            if (len < 2) return;
            const Vector a = ref_span.segment(beg, len), c = rec_span.segment(beg, len);
            if (auto v = safe_pearson(a, c)) rhos.push_back(*v);
            if (auto v = safe_rrmse(a, c)) errs.push_back(*v);
        };
        push(sr.p_begin, sr.p_end, rp, ep);
        push(sr.qrs_begin, sr.qrs_end, rq, eq);
        push(sr.t_begin, sr.t_end, rt, et);
    }

    rep.effective_ratio =
        rep.spans_evaluated ? double(rep.n_effective) / double(rep.spans_evaluated) : 0.0;
    rep.rho_p = maybe_aggregate(rp);
    rep.rho_qrs = maybe_aggregate(rq);
    rep.rho_t = maybe_aggregate(rt);
    rep.rrmse_p = maybe_aggregate(ep);
    rep.rrmse_qrs = maybe_aggregate(eq);
    rep.rrmse_t = maybe_aggregate(et);
    if (rep.n_effective > 0) rep.mae = interval_mae(rep.ref_intervals, rep.rec_intervals);
    return rep;
}

} // namespace xdjdl::ev
