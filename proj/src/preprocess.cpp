#include "xdjdl/preprocess.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace xdjdl::pre {

namespace {

std::size_t min_samples(double fs) { return static_cast<std::size_t>(std::llround(2.0 * fs)); }

std::vector<double> moving_average(const std::vector<double>& x, std::size_t width) {
    const std::size_t n = x.size();
    if (width <= 1) return x;
    const std::size_t half = width / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += x[j];
        out[i] = acc / double(hi - lo + 1);
    }
    return out;
}

// cut both channels at consecutive cut points, keep lengths in [0.25 s, 2 s]
std::vector<RawCyclePair> cut_pairs(const std::vector<double>& ppg, const std::vector<double>& ecg,
                                    const std::vector<std::size_t>& cuts, double fs) {
    if (cuts.size() < 2) fail(Err::InsufficientPeaks, "need at least two cut points");
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        if (cuts[i] >= ppg.size() || (i > 0 && cuts[i] <= cuts[i - 1]))
            fail(Err::InvalidParams, "cut points must be strictly increasing and in bounds");
    }
    const auto lo = static_cast<std::size_t>(std::llround(0.25 * fs));
    const auto hi = static_cast<std::size_t>(std::llround(2.0 * fs));
    std::vector<RawCyclePair> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const std::size_t len = cuts[i + 1] - cuts[i];
        if (len < lo || len > hi) continue;
        RawCyclePair pair;
        pair.ppg.assign(ppg.begin() + long(cuts[i]), ppg.begin() + long(cuts[i + 1]));
        pair.ecg.assign(ecg.begin() + long(cuts[i]), ecg.begin() + long(cuts[i + 1]));
        out.push_back(std::move(pair));
    }
    return out;
}

} // namespace

std::vector<double> detrend(const std::vector<double>& x, double lambda) {
    if (!(lambda > 0.0)) fail(Err::InvalidParams, "smoothing must be positive");
    const auto n = static_cast<Index>(x.size());
    if (n < 3) fail(Err::SequenceTooShort, "detrend needs at least 3 samples");

    // trend = (I + lambda^2 D2' D2)^-1 x, D2 = second difference; pentadiagonal SPD
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(3 * n));
    for (Index r = 0; r < n - 2; ++r) {
        trips.emplace_back(r, r, 1.0);
        trips.emplace_back(r, r + 1, -2.0);
        trips.emplace_back(r, r + 2, 1.0);
    }
    Eigen::SparseMatrix<double> D2(n - 2, n);
    D2.setFromTriplets(trips.begin(), trips.end());

    Eigen::SparseMatrix<double> K = (lambda * lambda) * Eigen::SparseMatrix<double>(D2.transpose() * D2);
    Eigen::SparseMatrix<double> I(n, n);
    I.setIdentity();
    K = K + I;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success) fail(Err::SingularSystem, "detrend system factorization failed");
    const Vector xv = Eigen::Map<const Vector>(x.data(), n);
    const Vector trend = solver.solve(xv);

    std::vector<double> out(x.size());
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = xv[i] - trend[i];
    return out;
}

std::vector<std::size_t> detect_r_peaks(const std::vector<double>& ecg, double fs) {
    if (!(fs > 0.0)) fail(Err::InvalidParams, "fs must be positive");
    const std::size_t n = ecg.size();
    if (n < min_samples(fs)) fail(Err::SequenceTooShort, "need at least 2 s of signal");

    const double dt = 1.0 / fs;
    const double two_pi = 6.283185307179586;

    // 5-15 Hz band-pass as cascaded first-order difference equations
    const double rc_hp = 1.0 / (two_pi * 5.0);
    const double a_hp = rc_hp / (rc_hp + dt);
    std::vector<double> hp(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) hp[i] = a_hp * (hp[i - 1] + ecg[i] - ecg[i - 1]);

    const double rc_lp = 1.0 / (two_pi * 15.0);
    const double a_lp = dt / (rc_lp + dt);
    std::vector<double> bp(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) bp[i] = bp[i - 1] + a_lp * (hp[i] - bp[i - 1]);

    // five-point derivative, squaring
    std::vector<double> sq(n, 0.0);
    for (std::size_t i = 4; i < n; ++i) {
        const double der = (2.0 * bp[i] + bp[i - 1] - bp[i - 3] - 2.0 * bp[i - 4]) / 8.0;
        sq[i] = der * der;
    }

    // 150 ms moving-window integration
    const auto w_int = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.150 * fs)));
    std::vector<double> integ(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += sq[i];
        if (i >= w_int) acc -= sq[i - w_int];
        integ[i] = acc / double(w_int);
    }

    // adaptive threshold seeded from the first two seconds
    const std::size_t warm = std::min(n, min_samples(fs));
    double spki = 0.0, npki = 0.0;
    for (std::size_t i = 0; i < warm; ++i) {
        spki = std::max(spki, integ[i]);
        npki += integ[i];
    }
    npki /= double(warm);
    spki *= 0.5;

    const auto refractory = static_cast<std::size_t>(std::llround(0.25 * fs));
    const auto refine_back = w_int + static_cast<std::size_t>(std::llround(0.075 * fs));
    const auto refine_fwd = static_cast<std::size_t>(std::llround(0.025 * fs));

    std::vector<std::size_t> peaks;
    long long last_crest = -static_cast<long long>(refractory) - 1;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(integ[i] > integ[i - 1] && integ[i] >= integ[i + 1])) continue; // not a crest
        const double thr = npki + 0.25 * (spki - npki);
        if (integ[i] <= thr || thr <= 0.0) {
            npki = 0.125 * integ[i] + 0.875 * npki;
            continue;
        }
        if (static_cast<long long>(i) - last_crest < static_cast<long long>(refractory)) continue;
        last_crest = static_cast<long long>(i);
        spki = 0.125 * integ[i] + 0.875 * spki;

        // refine to the raw-signal argmax near the crest (detector input is detrended)
        const std::size_t lo = i >= refine_back ? i - refine_back : 0;
        const std::size_t hi = std::min(n - 1, i + refine_fwd);
        std::size_t best = lo;
        for (std::size_t j = lo + 1; j <= hi; ++j) {
            if (ecg[j] > ecg[best]) best = j;
        }
        if (!peaks.empty()) {
            if (best <= peaks.back()) continue;
            if (best - peaks.back() < refractory) continue;
        }
        peaks.push_back(best);
    }
    return peaks;
}

std::vector<std::size_t> detect_ppg_onsets(const std::vector<double>& ppg, double fs) {
    if (!(fs > 0.0)) fail(Err::InvalidParams, "fs must be positive");
    const std::size_t n = ppg.size();
    if (n < min_samples(fs)) fail(Err::SequenceTooShort, "need at least 2 s of signal");

    const auto w_s = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.05 * fs)));
    const std::vector<double> sm = moving_average(ppg, w_s);

    std::vector<double> slope(n - 1);
    std::vector<double> rising;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        slope[i] = sm[i + 1] - sm[i];
        if (slope[i] > 0.0) rising.push_back(slope[i]);
    }
    if (rising.empty()) return {};
    std::sort(rising.begin(), rising.end());
    const double p95 = rising[static_cast<std::size_t>(0.95 * double(rising.size() - 1))];
    const double thr = 0.5 * p95;
    if (!(thr > 0.0)) return {};

    const auto refractory = static_cast<std::size_t>(std::llround(0.25 * fs));
    std::vector<std::size_t> onsets;
    long long last = -static_cast<long long>(refractory) - 1;
    for (std::size_t i = 1; i + 1 < slope.size(); ++i) {
        if (!(slope[i] > thr && slope[i] >= slope[i - 1] && slope[i] >= slope[i + 1])) continue;
        if (static_cast<long long>(i) - last < static_cast<long long>(refractory)) continue;
        last = static_cast<long long>(i);

        // walk back to the local minimum that precedes this upslope
        std::size_t j = i;
        while (j > 0 && sm[j - 1] <= sm[j]) --j;
        if (j == 0) continue; // ran off the edge: not a confirmed minimum
        if (!onsets.empty() && j <= onsets.back()) continue;
        onsets.push_back(j);
    }
    return onsets;
}

std::vector<RawCyclePair> segment_r2r(const std::vector<double>& ppg,
                                      const std::vector<double>& ecg,
                                      const std::vector<std::size_t>& r_peaks, double fs) {
    if (ppg.size() != ecg.size()) fail(Err::DimensionMismatch, "ppg/ecg lengths differ");
    return cut_pairs(ppg, ecg, r_peaks, fs);
}

std::vector<std::vector<double>> segment_o2o(const std::vector<double>& ppg,
                                             const std::vector<std::size_t>& onsets, double fs) {
    auto pairs = cut_pairs(ppg, ppg, onsets, fs);
    std::vector<std::vector<double>> out;
    out.reserve(pairs.size());
    for (auto& p : pairs) out.push_back(std::move(p.ppg));
    return out;
}

std::vector<double> resample_cycle(const std::vector<double>& cycle, Index d) {
    if (d <= 0) fail(Err::InvalidParams, "target length must be positive");
    if (cycle.size() < 2) fail(Err::SequenceTooShort, "resampling needs at least 2 samples");
    if (d == 1) return {cycle.front()};

    const auto len = static_cast<Index>(cycle.size());
    std::vector<double> out(static_cast<std::size_t>(d));
    const double step = double(len - 1) / double(d - 1);
    for (Index i = 0; i < d; ++i) {
        const double pos = double(i) * step;
        auto j = static_cast<Index>(pos);
        if (j >= len - 1) j = len - 2;
        const double frac = pos - double(j);
        out[static_cast<std::size_t>(i)] = cycle[static_cast<std::size_t>(j)] * (1.0 - frac) +
                                           cycle[static_cast<std::size_t>(j + 1)] * frac;
    }
    return out;
}

std::vector<double> normalize_cycle(const std::vector<double>& cycle) {
    const std::size_t n = cycle.size();
    if (n < 2) fail(Err::DegenerateCycle, "cannot normalize fewer than 2 samples");
    const double mean = std::accumulate(cycle.begin(), cycle.end(), 0.0) / double(n);
    double ss = 0.0;
    for (double v : cycle) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(n - 1));
    if (sd <= 1e-12) fail(Err::DegenerateCycle, "cycle standard deviation is (near) zero");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (cycle[i] - mean) / sd;
    return out;
}

BuildResult build_dataset(const std::vector<RawRecord>& records, const BuildOptions& opts,
                          const std::vector<int>* record_labels) {
    if (opts.d < 2) fail(Err::InvalidParams, "normalized cycle length must be at least 2");
    if (!(opts.smoothing > 0.0)) fail(Err::InvalidParams, "smoothing must be positive");
    if (opts.mode != "r2r" && opts.mode != "o2o") fail(Err::InvalidParams, "mode must be r2r or o2o");
    if (records.empty()) fail(Err::EmptyDataset, "no records supplied");
    if (record_labels && record_labels->size() != records.size())
        fail(Err::ShapeMismatch, "one label per record required");

    const double fs = records.front().fs;
    for (const RawRecord& rec : records) {
        if (!(rec.fs > 0.0)) fail(Err::InvalidParams, "record sample rate must be positive");
        if (rec.fs != fs) fail(Err::InvalidParams, "records must share one sample rate");
        if (rec.ppg.size() != rec.ecg.size()) fail(Err::DimensionMismatch, "ppg/ecg lengths differ");
    }

    BuildResult out;
    std::vector<Vector> p_cols, e_cols;
    for (std::size_t ri = 0; ri < records.size(); ++ri) {
        const RawRecord& rec = records[ri];
        const std::vector<double> dp = detrend(rec.ppg, opts.smoothing);
        const std::vector<double> de = detrend(rec.ecg, opts.smoothing);
        const std::vector<std::size_t> cuts =
            opts.mode == "r2r" ? detect_r_peaks(de, fs) : detect_ppg_onsets(dp, fs);
        if (cuts.size() < 2) continue;

        for (const RawCyclePair& pair : segment_r2r(dp, de, cuts, fs)) {
            try {
                const auto pr = normalize_cycle(resample_cycle(pair.ppg, opts.d));
                const auto er = normalize_cycle(resample_cycle(pair.ecg, opts.d));
                p_cols.emplace_back(Eigen::Map<const Vector>(pr.data(), opts.d));
                e_cols.emplace_back(Eigen::Map<const Vector>(er.data(), opts.d));
                out.cycles.src_len.push_back(static_cast<int>(pair.ppg.size()));
                if (record_labels) out.cycles.labels.push_back((*record_labels)[ri]);
            } catch (const Error& e) {
                if (e.code() != Err::DegenerateCycle) throw;
                ++out.skipped_degenerate;
            }
        }
    }

    if (p_cols.empty()) fail(Err::EmptyDataset, "no cycles survived preprocessing");
    out.cycles.ppg.resize(opts.d, static_cast<Index>(p_cols.size()));
    out.cycles.ecg.resize(opts.d, static_cast<Index>(e_cols.size()));
    for (std::size_t j = 0; j < p_cols.size(); ++j) {
        out.cycles.ppg.col(static_cast<Index>(j)) = p_cols[j];
        out.cycles.ecg.col(static_cast<Index>(j)) = e_cols[j];
    }
    out.cycles.fs = fs;
    out.cycles.mode = opts.mode;
    return out;
}

} // namespace xdjdl::pre
