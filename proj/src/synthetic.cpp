#include "xdjdl/synthetic.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "xdjdl/rng.hpp"

namespace xdjdl::synth {

namespace {

Matrix random_dictionary(Index d, Index k, Rng& rng) {
    Matrix G(d, k);
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i < d; ++i) G(i, j) = rng.normal();
    }
    // thin Q of a Householder QR: orthonormal columns
    Eigen::HouseholderQR<Matrix> qr(G);
    return qr.householderQ() * Matrix::Identity(d, k);
}

double signed_scale(Rng& rng) {
    const double mag = 0.5 + rng.uniform01(); // |value| in [0.5, 1.5)
    return rng.uniform01() < 0.5 ? -mag : mag;
}

// n-choose-s with saturation; only used against the 1e6 enumeration guard
double choose_approx(Index n, Index s) {
    double v = 1.0;
    for (Index i = 0; i < s; ++i) {
        v *= double(n - i) / double(i + 1);
        if (v > 1e18) return v;
    }
    return v;
}

} // namespace

void EcgTemplateParams::validate() const {
    if (!(hr_bpm > 0.0)) fail(Err::InvalidParams, "hr_bpm must be positive");
    if (!(noise_std >= 0.0)) fail(Err::InvalidParams, "noise_std must be nonnegative");
    if (!(hr_jitter_pct >= 0.0) || hr_jitter_pct > 0.5)
        fail(Err::InvalidParams, "hr_jitter_pct must lie in [0, 0.5]");
    if (!(ppg_offset_s >= 0.0)) fail(Err::InvalidParams, "ppg_offset_s must be nonnegative");
    double prev = 0.0;
    for (const Wave& w : waves) {
        if (!(w.center > prev) || !(w.center < 1.0))
            fail(Err::InvalidParams, "wave centers must be strictly increasing inside (0,1)");
        if (!(w.width > 0.0)) fail(Err::InvalidParams, "wave widths must be positive");
        prev = w.center;
    }
}

SyntheticRecord gen_synthetic_record(double duration_s, double fs, const EcgTemplateParams& params) {
    if (!(duration_s > 0.0)) fail(Err::InvalidParams, "duration_s must be positive");
    if (!(fs > 0.0)) fail(Err::InvalidParams, "fs must be positive");
    params.validate();

    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
    if (n < 2) fail(Err::InvalidParams, "record too short for the requested fs");

    SyntheticRecord out;
    out.record.fs = fs;
    out.record.ppg.assign(n, 0.0);
    out.record.ecg.assign(n, 0.0);

    Rng rng(params.seed);
    const double period_nominal = 60.0 / params.hr_bpm;

    // beat grid, optionally jittered per beat
    std::vector<double> starts, periods;
    double t0 = 0.0;
    while (t0 < duration_s) {
        double period = period_nominal;
        if (params.hr_jitter_pct > 0.0)
            period *= 1.0 + params.hr_jitter_pct * (2.0 * rng.uniform01() - 1.0);
        starts.push_back(t0);
        periods.push_back(period);
        t0 += period;
    }

    auto push_if_inside = [&](std::vector<std::size_t>& v, double time_s) {
        const auto idx = static_cast<long long>(std::llround(time_s * fs));
        if (idx >= 0 && idx < static_cast<long long>(n)) v.push_back(static_cast<std::size_t>(idx));
    };

    for (std::size_t b = 0; b < starts.size(); ++b) {
        const double T = periods[b];
        std::vector<std::size_t>* marks[5] = {&out.truth.p, &out.truth.q, &out.truth.r,
                                              &out.truth.s, &out.truth.t};
        for (int w = 0; w < 5; ++w) {
            const Wave& wave = params.waves[static_cast<std::size_t>(w)];
            const double center = starts[b] + wave.center * T;
            const double sigma = wave.width * T;
            if (center < duration_s) push_if_inside(*marks[w], center);
            // bump support: +-5 sigma
            const auto lo = static_cast<long long>(std::floor((center - 5.0 * sigma) * fs));
            const auto hi = static_cast<long long>(std::ceil((center + 5.0 * sigma) * fs));
            for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(n); ++i) {
                const double dt = double(i) / fs - center;
                out.record.ecg[static_cast<std::size_t>(i)] +=
                    wave.amplitude * std::exp(-dt * dt / (2.0 * sigma * sigma));
            }
        }

        // pulse: (x/xp)^2 * exp(2*(1 - x/xp)), unit peak at x = xp, fast rise slow decay
        const double r_time = starts[b] + params.waves[2].center * T;
        const double onset = r_time + params.ppg_offset_s;
        if (onset < duration_s) push_if_inside(out.truth.onsets, onset);
        const double xp = 0.15 * T;
        const auto first = static_cast<long long>(std::ceil(onset * fs));
        for (long long i = std::max(0LL, first); i < static_cast<long long>(n); ++i) {
            const double x = double(i) / fs - onset;
            if (x < 0.0) continue;
            const double rel = x / xp;
            const double v = rel * rel * std::exp(2.0 * (1.0 - rel));
            if (x > xp && v < 1e-6) break;
            out.record.ppg[static_cast<std::size_t>(i)] += v;
        }
    }

    if (params.noise_std > 0.0) {
        for (std::size_t i = 0; i < n; ++i) out.record.ecg[i] += params.noise_std * rng.normal();
        for (std::size_t i = 0; i < n; ++i) out.record.ppg[i] += params.noise_std * rng.normal();
    }

    out.truth.pr_s = (params.waves[2].center - params.waves[0].center) * period_nominal;
    out.truth.qrs_s = (params.waves[3].center - params.waves[1].center) * period_nominal;
    out.truth.qt_s = (params.waves[4].center - params.waves[1].center) * period_nominal;
    return out;
}

PlantedModel gen_planted_model(Index d, Index k_e, Index k_p, Index t_e, Index t_p, Index n,
                               Index class_count, std::uint64_t seed) {
    if (d <= 0 || k_e <= 0 || k_p <= 0 || n <= 0) fail(Err::InvalidParams, "dims must be positive");
    if (k_e > d || k_p > d)
        fail(Err::InvalidParams, "atom counts above d would break column orthonormality");
    if (t_e <= 0 || t_e > k_e) fail(Err::SparsityExceedsAtoms, "t_e outside [1, k_e]");
    if (t_p <= 0 || t_p > k_p) fail(Err::SparsityExceedsAtoms, "t_p outside [1, k_p]");
    if (class_count < 0 || class_count > k_p || class_count > k_e)
        fail(Err::InvalidParams, "class_count exceeds atom pools");

    Rng rng(seed);
    PlantedModel model;
    model.D_e = random_dictionary(d, k_e, rng);
    model.D_p = random_dictionary(d, k_p, rng);

    const Index pools = class_count >= 2 ? class_count : 1;
    auto pool_range = [](Index total, Index pool, Index count) {
        const Index base = total / count, rem = total % count;
        const Index begin = pool * base + std::min(pool, rem);
        const Index len = base + (pool < rem ? 1 : 0);
        return std::pair<Index, Index>(begin, len);
    };

    // one ECG target atom per PPG atom, pool-local when classes are requested
    std::vector<Index> target(static_cast<std::size_t>(k_p));
    model.W = Matrix::Zero(k_e, k_p);
    for (Index c = 0; c < pools; ++c) {
        const auto [pb, pl] = pool_range(k_p, c, pools);
        const auto [eb, el] = pool_range(k_e, c, pools);
        for (Index j = 0; j < pl; ++j) {
            target[static_cast<std::size_t>(pb + j)] = eb + (j % el);
            model.W(eb + (j % el), pb + j) = signed_scale(rng);
        }
    }

    model.A_p = Matrix::Zero(k_p, n);
    model.labels.clear();
    for (Index col = 0; col < n; ++col) {
        const Index cls = pools >= 2 ? col % pools : 0;
        if (pools >= 2) model.labels.push_back(static_cast<int>(cls));
        const auto [pb, pl] = pool_range(k_p, cls, pools);

        // pick t_p distinct pool atoms whose ECG targets stay within t_e slots
        std::vector<Index> chosen;
        std::vector<Index> used_targets;
        std::vector<char> taken(static_cast<std::size_t>(pl), 0);
        Index guard = 0;
        while (static_cast<Index>(chosen.size()) < std::min(t_p, pl)) {
            if (++guard > 10000 * t_p) fail(Err::InvalidParams, "cannot satisfy joint sparsity pools");
            const Index off = static_cast<Index>(rng.uniform_index(static_cast<std::size_t>(pl)));
            if (taken[static_cast<std::size_t>(off)]) continue;
            const Index atom = pb + off;
            const Index tgt = target[static_cast<std::size_t>(atom)];
            const bool seen = std::find(used_targets.begin(), used_targets.end(), tgt) != used_targets.end();
            if (!seen && static_cast<Index>(used_targets.size()) >= t_e) continue;
            taken[static_cast<std::size_t>(off)] = 1;
            chosen.push_back(atom);
            if (!seen) used_targets.push_back(tgt);
        }
        for (Index atom : chosen) model.A_p(atom, col) = signed_scale(rng);
    }

    model.X_p = model.D_p * model.A_p;
    model.X_e = model.D_e * (model.W * model.A_p);
    return model;
}

Vector brute_force_sparse_oracle(const Matrix& D, const Vector& x, Index t) {
    const Index m = D.rows();
    const Index k = D.cols();
    if (x.size() != m) fail(Err::DimensionMismatch, "signal length does not match atom length");
    if (t <= 0) fail(Err::InvalidParams, "sparsity target must be positive");
    if (t > k) fail(Err::SparsityExceedsAtoms, "sparsity target exceeds atom count");

    double total = 0.0;
    for (Index s = 1; s <= t; ++s) total += choose_approx(k, s);
    if (total > 1e6) fail(Err::CombinatorialGuard, "support enumeration exceeds 1e6");

    Vector best = Vector::Zero(k);
    double best_res = x.squaredNorm();

    std::vector<Index> comb;
    Matrix D_s(m, t);
    for (Index s = 1; s <= t; ++s) {
        comb.resize(static_cast<std::size_t>(s));
        std::iota(comb.begin(), comb.end(), Index{0});
        while (true) {
            for (Index i = 0; i < s; ++i) D_s.col(i) = D.col(comb[static_cast<std::size_t>(i)]);
            const auto cols = D_s.leftCols(s);
            const Vector coef = cols.householderQr().solve(x);
            const double res = (x - cols * coef).squaredNorm();
            if (res < best_res) { // first hit wins exact ties: sizes then lex order
                best_res = res;
                best.setZero();
                for (Index i = 0; i < s; ++i) best[comb[static_cast<std::size_t>(i)]] = coef[i];
            }
            // next combination in lexicographic order
            Index pos = s - 1;
            while (pos >= 0 && comb[static_cast<std::size_t>(pos)] == k - s + pos) --pos;
            if (pos < 0) break;
            ++comb[static_cast<std::size_t>(pos)];
            for (Index i = pos + 1; i < s; ++i)
                comb[static_cast<std::size_t>(i)] = comb[static_cast<std::size_t>(i - 1)] + 1;
        }
    }
    return best;
}

} // namespace xdjdl::synth
