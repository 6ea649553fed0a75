#include <doctest.h>

#include "xdjdl/evaluate.hpp"
#include "xdjdl/synthetic.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace xdjdl;

namespace {

bool err_code(Err want, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == want;
    }
    return false;
}

// consecutive R-to-R slices of a clean synthetic record: d = 125, R at index 0
Matrix truth_cut_cycles() {
    synth::EcgTemplateParams params;
    const synth::SyntheticRecord rec = synth::gen_synthetic_record(10.0, 125.0, params);
    const std::size_t n_cyc = rec.truth.r.size() - 1;
    Matrix T(125, static_cast<Index>(n_cyc));
    for (std::size_t k = 0; k < n_cyc; ++k) {
        for (Index i = 0; i < 125; ++i)
            T(i, static_cast<Index>(k)) = rec.record.ecg[rec.truth.r[k] + std::size_t(i)];
    }
    return T;
}

// beat-centered span: last 50 samples of one cycle, first 75 of the next
Vector make_span(const Matrix& T, Index i) {
    Vector span(125);
    span.head(50) = T.col(i - 1).tail(50);
    span.tail(75) = T.col(i).head(75);
    return span;
}

} // namespace

TEST_CASE("pearson correlation") {
    Vector x(4), y(4);
    x << 1, 2, 3, 4;

    SUBCASE("positive affine relations score exactly one") {
        y = 2.0 * x.array() + 3.0;
        CHECK(ev::pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));
        y = -1.0 * x.array() + 1.0;
        CHECK(ev::pearson(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("matches the direct formula") {
        y << 1, 2, 3, 5;
        CHECK(ev::pearson(x, y) == doctest::Approx(6.5 / std::sqrt(5.0 * 8.75)).epsilon(1e-12));
        CHECK(ev::pearson(x, y) == doctest::Approx(ev::pearson(y, x)).epsilon(1e-15));
    }
    SUBCASE("affine invariance") {
        y << 4, 1, 3, 2;
        const double base = ev::pearson(x, y);
        const Vector xs = 7.0 * x.array() - 11.0;
        CHECK(ev::pearson(xs, y) == doctest::Approx(base).epsilon(1e-12));
        const Vector xf = -2.0 * x.array() + 0.5;
        CHECK(ev::pearson(xf, y) == doctest::Approx(-base).epsilon(1e-12));
    }
    SUBCASE("degenerate inputs are rejected") {
        y.setConstant(3.0);
        CHECK(err_code(Err::DegenerateInput, [&] { ev::pearson(x, y); }));
        CHECK(err_code(Err::DegenerateInput, [&] { ev::pearson(y, x); }));
        CHECK(err_code(Err::DimensionMismatch, [&] { ev::pearson(x, Vector::Zero(3)); }));
        Vector one(1);
        one << 2.0;
        CHECK(err_code(Err::DegenerateInput, [&] { ev::pearson(one, one); }));
    }
}

TEST_CASE("relative reconstruction error") {
    Vector x(2), xhat(2);
    x << 3, 4;

    xhat = x;
    CHECK(ev::rrmse(x, xhat) == 0.0);
    xhat.setZero();
    CHECK(ev::rrmse(x, xhat) == doctest::Approx(1.0).epsilon(1e-15));
    xhat << 3, 0;
    CHECK(ev::rrmse(x, xhat) == doctest::Approx(0.8).epsilon(1e-15)); // 4/5

    // scale invariance
    CHECK(ev::rrmse(10.0 * x, 10.0 * xhat) == doctest::Approx(0.8).epsilon(1e-12));

    CHECK(err_code(Err::DegenerateInput, [&] { ev::rrmse(Vector::Zero(2), xhat); }));
    CHECK(err_code(Err::DimensionMismatch, [&] { ev::rrmse(x, Vector::Zero(3)); }));
}

TEST_CASE("fiducials on a beat-centered synthetic span") {
    const Matrix T = truth_cut_cycles();
    const Vector span = make_span(T, 1);
    const ev::Fiducials fid = ev::detect_fiducials(span, 125.0);

    REQUIRE(fid.complete());
    CHECK(fid.ordered());
    CHECK(*fid.r == 50);
    CHECK(std::abs(*fid.q - 45) <= 1);
    CHECK(std::abs(*fid.s - 55) <= 1);
    CHECK(std::abs(*fid.p - 30) <= 1);
    CHECK(std::abs(*fid.t - 85) <= 1);
}

TEST_CASE("fiducials degrade gracefully without local extrema") {
    Vector ramp(100);
    for (Index i = 0; i < 100; ++i) ramp[i] = double(i);
    const ev::Fiducials fid = ev::detect_fiducials(ramp, 125.0);
    CHECK(*fid.r == 99);
    CHECK(!fid.q);
    CHECK(!fid.s);
    CHECK(!fid.p);
    CHECK(!fid.t);
    CHECK(!fid.complete());

    CHECK(err_code(Err::InvalidParams, [&] { ev::detect_fiducials(ramp, 0.0); }));
    CHECK(err_code(Err::DegenerateInput, [] { ev::detect_fiducials(Vector(), 125.0); }));
}

TEST_CASE("beat border splits the R-R span at the ratio point") {
    CHECK(ev::subwave_border(0, 100) == 60);
    CHECK(ev::subwave_border(10, 100) == 70);
    CHECK(ev::subwave_border(0, 100, 0.5) == 50);
}

TEST_CASE("subwave ranges partition the span") {
    const Matrix T = truth_cut_cycles();
    const Vector span = make_span(T, 2);
    const ev::Fiducials fid = ev::detect_fiducials(span, 125.0);
    REQUIRE(fid.ordered());

    const ev::SubwaveRanges sr = ev::split_subwaves(125, fid);
    CHECK(sr.p_begin == 0);
    CHECK(sr.p_end == *fid.q);
    CHECK(sr.qrs_begin == *fid.q);
    CHECK(sr.qrs_end == *fid.s + 1);
    CHECK(sr.t_begin == *fid.s + 1);
    CHECK(sr.t_end == 125);

    ev::Fiducials missing = fid;
    missing.q.reset();
    CHECK(err_code(Err::MissingFiducials, [&] { ev::split_subwaves(125, missing); }));

    ev::Fiducials disordered = fid;
    disordered.q = *fid.s + 1;
    CHECK(err_code(Err::MissingFiducials, [&] { ev::split_subwaves(125, disordered); }));

    CHECK(err_code(Err::InvalidParams, [&] { ev::split_subwaves(1, fid); }));
    CHECK(err_code(Err::InvalidParams, [&] { ev::split_subwaves(125, fid, 1.0); }));
}

TEST_CASE("interval extraction") {
    ev::Fiducials fid;
    fid.p = 30;
    fid.q = 45;
    fid.r = 50;
    fid.s = 55;
    fid.t = 85;
    const ev::Intervals iv = ev::intervals(fid, 125.0);
    REQUIRE(iv.pr);
    REQUIRE(iv.qrs);
    REQUIRE(iv.qt);
    CHECK(*iv.pr == doctest::Approx(0.16).epsilon(1e-15));
    CHECK(*iv.qrs == doctest::Approx(0.08).epsilon(1e-15));
    CHECK(*iv.qt == doctest::Approx(0.32).epsilon(1e-15));

    ev::Fiducials partial;
    partial.q = 45;
    partial.r = 50;
    partial.s = 55;
    const ev::Intervals pv = ev::intervals(partial, 125.0);
    CHECK(!pv.pr);
    REQUIRE(pv.qrs);
    CHECK(!pv.qt);

    ev::Fiducials reversed = fid;
    reversed.p = 60; // after R: not a valid PR pair
    CHECK(!ev::intervals(reversed, 125.0).pr);

    CHECK(err_code(Err::InvalidParams, [&] { ev::intervals(fid, 0.0); }));
}

TEST_CASE("interval mean absolute error") {
    auto iv = [](double pr, double qrs, double qt) {
        ev::Intervals v;
        v.pr = pr;
        v.qrs = qrs;
        v.qt = qt;
        return v;
    };

    SUBCASE("identical lists give exactly zero") {
        const std::vector<ev::Intervals> a{iv(0.16, 0.08, 0.32), iv(0.15, 0.09, 0.31)};
        const ev::IntervalMae mae = ev::interval_mae(a, a);
        CHECK(*mae.pr == 0.0);
        CHECK(*mae.qrs == 0.0);
        CHECK(*mae.qt == 0.0);
        CHECK(mae.used_pr == 2);
        CHECK(mae.used_qrs == 2);
        CHECK(mae.used_qt == 2);
        CHECK(mae.excluded == 0);
    }
    SUBCASE("a constant offset is reported exactly") {
        std::vector<ev::Intervals> a{iv(0.16, 0.08, 0.32), iv(0.15, 0.09, 0.31)};
        std::vector<ev::Intervals> b = a;
        for (ev::Intervals& v : b) v.pr = *v.pr + 0.02;
        const ev::IntervalMae mae = ev::interval_mae(a, b);
        CHECK(*mae.pr == doctest::Approx(0.02).epsilon(1e-12));
        CHECK(*mae.qrs == 0.0);
        CHECK(ev::interval_mae(b, a).pr == mae.pr); // symmetric
    }
    SUBCASE("types are counted only when both sides measured them") {
        ev::Intervals only_pr, only_qt, qrs_qt, only_qrs;
        only_pr.pr = 0.2;
        only_qt.qt = 0.4;
        qrs_qt.qrs = 0.1;
        qrs_qt.qt = 0.3;
        only_qrs.qrs = 0.2;
        const std::vector<ev::Intervals> a{only_pr, qrs_qt};
        const std::vector<ev::Intervals> b{only_qt, only_qrs};
        const ev::IntervalMae mae = ev::interval_mae(a, b);
        CHECK(!mae.pr); // pr was never measured on both sides at once
        CHECK(mae.used_pr == 0);
        CHECK(!mae.qt);
        REQUIRE(mae.qrs);
        CHECK(*mae.qrs == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(mae.used_qrs == 1);
        CHECK(mae.excluded == 1); // the first pair shares nothing
    }
    SUBCASE("no common measurement anywhere is an error") {
        ev::Intervals only_pr, only_qt;
        only_pr.pr = 0.2;
        only_qt.qt = 0.4;
        const std::vector<ev::Intervals> a{only_pr};
        const std::vector<ev::Intervals> b{only_qt};
        CHECK(err_code(Err::EmptyAfterExclusion, [&] { ev::interval_mae(a, b); }));
        CHECK(err_code(Err::DimensionMismatch,
                       [&] { ev::interval_mae(a, std::vector<ev::Intervals>{}); }));
    }
    SUBCASE("loop oracle over mixed presence") {
        std::vector<ev::Intervals> a, b;
        for (int i = 0; i < 7; ++i) {
            ev::Intervals va, vb;
            if (i % 2 == 0) va.pr = 0.1 * i;
            if (i % 3 != 1) vb.pr = 0.05 * i;
            va.qrs = 0.08;
            vb.qrs = 0.08 + 0.001 * i;
            a.push_back(va);
            b.push_back(vb);
        }
        const ev::IntervalMae mae = ev::interval_mae(a, b);
        double acc = 0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].pr && b[i].pr) {
                acc += std::abs(*a[i].pr - *b[i].pr);
                ++cnt;
            }
        }
        REQUIRE(cnt > 0);
        CHECK(mae.used_pr == cnt);
        CHECK(*mae.pr == doctest::Approx(acc / double(cnt)).epsilon(1e-12));
        CHECK(mae.used_qrs == 7);
    }
}

TEST_CASE("aggregate statistics") {
    const ev::Aggregate even = ev::aggregate({4.0, 1.0, 3.0, 2.0});
    CHECK(even.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(even.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
    CHECK(even.median == doctest::Approx(2.5).epsilon(1e-15)); // mean of the central two

    const ev::Aggregate odd = ev::aggregate({3.0, 1.0, 2.0});
    CHECK(odd.median == 2.0);

    const ev::Aggregate single = ev::aggregate({5.0});
    CHECK(single.mean == 5.0);
    CHECK(single.stddev == 0.0);
    CHECK(single.median == 5.0);

    CHECK(err_code(Err::EmptyDataset, [] { ev::aggregate({}); }));
}

TEST_CASE("batch evaluation of identical reconstructions") {
    const Matrix T = truth_cut_cycles();
    const ev::EvalReport rep = ev::evaluate_batch(T, T, 125.0);

    REQUIRE(rep.n_cycles == 9);
    CHECK(rep.n_excluded == 0);
    for (double v : rep.rho) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : rep.rrmse) CHECK(v == 0.0);
    CHECK(rep.rho_agg.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.rrmse_agg.mean == 0.0);

    CHECK(rep.spans_evaluated == 8);
    CHECK(rep.n_effective == 8);
    CHECK(rep.effective_ratio == 1.0);
    REQUIRE(rep.mae.pr);
    CHECK(*rep.mae.pr == 0.0);
    CHECK(*rep.mae.qrs == 0.0);
    CHECK(*rep.mae.qt == 0.0);
    CHECK(rep.mae.used_pr == 8);

    REQUIRE(rep.rho_qrs);
    CHECK(rep.rho_qrs->mean == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(rep.rrmse_t);
    CHECK(rep.rrmse_t->mean == 0.0);
}

TEST_CASE("batch evaluation is affine-invariant in correlation and intervals") {
    const Matrix T = truth_cut_cycles();
    const Matrix R = 2.0 * T.array() + 5.0;
    const ev::EvalReport rep = ev::evaluate_batch(R, T, 125.0);

    for (double v : rep.rho) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.rrmse_agg.mean > 0.0); // scale errors do show up here
    CHECK(rep.n_effective == 8);
    CHECK(*rep.mae.pr == 0.0); // extrema positions are unchanged
    CHECK(*rep.mae.qrs == 0.0);
    CHECK(*rep.mae.qt == 0.0);
}

TEST_CASE("degenerate cycles are excluded without failing the batch") {
    const Matrix T = truth_cut_cycles();
    Matrix R = T;
    R.col(3).setZero();
    const ev::EvalReport rep = ev::evaluate_batch(R, T, 125.0);

    CHECK(rep.n_excluded == 1);
    CHECK(rep.excluded[3] == 1);
    CHECK(std::isnan(rep.rho[3]));
    CHECK(std::isnan(rep.rrmse[3]));

    // spans touching the excluded cycle are not effective
    CHECK(rep.effective[2] == 0); // span (2,3)
    CHECK(rep.effective[3] == 0); // span (3,4)
    CHECK(rep.n_effective == 6);

    // aggregates are over the surviving cycles only
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < rep.rho.size(); ++j) {
        if (!rep.excluded[j]) {
            acc += rep.rho[j];
            ++cnt;
        }
    }
    CHECK(rep.rho_agg.mean == doctest::Approx(acc / double(cnt)).epsilon(1e-12));
}

TEST_CASE("batch evaluation argument checks") {
    const Matrix T = truth_cut_cycles();
    CHECK(err_code(Err::DimensionMismatch,
                   [&] { ev::evaluate_batch(T.leftCols(3), T, 125.0); }));
    CHECK(err_code(Err::EmptyDataset, [] { ev::evaluate_batch(Matrix(), Matrix(), 125.0); }));
    CHECK(err_code(Err::InvalidParams, [&] { ev::evaluate_batch(T, T, 0.0); }));
    CHECK(err_code(Err::EmptyDataset, [&] {
        ev::evaluate_batch(Matrix::Zero(T.rows(), T.cols()), Matrix::Zero(T.rows(), T.cols()),
                           125.0);
    }));

    ev::EvalOptions opts;
    opts.fs_effective_per_cycle.assign(4, 125.0); // wrong count
    CHECK(err_code(Err::ShapeMismatch, [&] { ev::evaluate_batch(T, T, 125.0, opts); }));

    // matching per-cycle rates reproduce the scalar-rate result
    ev::EvalOptions per;
    per.fs_effective_per_cycle.assign(static_cast<std::size_t>(T.cols()), 125.0);
    const ev::EvalReport a = ev::evaluate_batch(T, T, 125.0);
    const ev::EvalReport b = ev::evaluate_batch(T, T, 999.0, per); // scalar ignored
    CHECK(a.n_effective == b.n_effective);
    REQUIRE(b.mae.qrs);
    CHECK(*a.mae.qrs == *b.mae.qrs);
}
