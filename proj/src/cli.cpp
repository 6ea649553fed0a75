#include "xdjdl/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "xdjdl/data_io.hpp"
#include "xdjdl/dict_learning.hpp"
#include "xdjdl/evaluate.hpp"
#include "xdjdl/inference.hpp"
#include "xdjdl/preprocess.hpp"
#include "xdjdl/synthetic.hpp"

namespace xdjdl::cli {

namespace {

using nlohmann::json;

struct Paths {
    std::string record = "record.csv";
    std::string truth = "truth.json";
    std::string cycles = "cycles";
    std::string labels;
    std::string model = "model.bin";
    std::string recon = "recon.csv";
    std::string report = "report.json";
    std::string percycle = "percycle.csv";
};

struct RunConfig {
    json synth;       // optional generator knobs
    pre::BuildOptions preprocess;
    HyperParams train;
    std::string variant = "xdjdl"; // xdjdl | lc_xdjdl | dct
    Index class_count = 0;         // 0 = infer from labels
    Index ones_per_class = 1;
    double train_ratio = 0.8;
    Paths paths;
};

std::string join_path(const std::string& dir, const std::string& leaf) {
    if (dir.empty() || leaf.empty()) return leaf;
    if (std::filesystem::path(leaf).is_absolute()) return leaf;
    return (std::filesystem::path(dir) / leaf).string();
}

double get_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

Index get_or(const json& j, const char* key, Index fallback) {
    return j.contains(key) ? j.at(key).get<Index>() : fallback;
}

std::string get_or(const json& j, const char* key, const std::string& fallback) {
    return j.contains(key) ? j.at(key).get<std::string>() : fallback;
}

RunConfig load_config(const CommonArgs& args) {
    if (args.config_path.empty()) fail(Err::InvalidParams, "--config is required");
    std::ifstream f(args.config_path);
    if (!f) fail(Err::InvalidParams, "cannot open config: " + args.config_path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        fail(Err::InvalidParams, args.config_path + ": " + e.what());
    }

    RunConfig cfg;
    try {
        if (doc.contains("synth")) cfg.synth = doc["synth"];
        if (doc.contains("preprocess")) {
            const json& p = doc["preprocess"];
            cfg.preprocess.d = get_or(p, "d", cfg.preprocess.d);
            cfg.preprocess.smoothing = get_or(p, "smoothing", cfg.preprocess.smoothing);
            cfg.preprocess.mode = get_or(p, "mode", cfg.preprocess.mode);
        }
        if (doc.contains("train")) {
            const json& t = doc["train"];
            cfg.train.k_e = get_or(t, "k_e", cfg.train.k_e);
            cfg.train.k_p = get_or(t, "k_p", cfg.train.k_p);
            cfg.train.t_e = get_or(t, "t_e", cfg.train.t_e);
            cfg.train.t_p = get_or(t, "t_p", cfg.train.t_p);
            cfg.train.alpha = get_or(t, "alpha", cfg.train.alpha);
            cfg.train.beta = get_or(t, "beta", cfg.train.beta);
            cfg.train.gamma = get_or(t, "gamma", cfg.train.gamma);
            cfg.train.ridge_lambda = get_or(t, "ridge_lambda", cfg.train.ridge_lambda);
            cfg.train.max_iters = static_cast<int>(get_or(t, "max_iters", Index(cfg.train.max_iters)));
            cfg.train.rel_tol = get_or(t, "rel_tol", cfg.train.rel_tol);
            if (t.contains("seed")) cfg.train.seed = t.at("seed").get<std::uint64_t>();
            cfg.variant = get_or(t, "variant", cfg.variant);
            cfg.class_count = get_or(t, "class_count", cfg.class_count);
            cfg.ones_per_class = get_or(t, "ones_per_class", cfg.ones_per_class);
        }
        if (doc.contains("split")) cfg.train_ratio = get_or(doc["split"], "train_ratio", cfg.train_ratio);
        if (doc.contains("paths")) {
            const json& p = doc["paths"];
            cfg.paths.record = get_or(p, "record", cfg.paths.record);
            cfg.paths.truth = get_or(p, "truth", cfg.paths.truth);
            cfg.paths.cycles = get_or(p, "cycles", cfg.paths.cycles);
            cfg.paths.labels = get_or(p, "labels", cfg.paths.labels);
            cfg.paths.model = get_or(p, "model", cfg.paths.model);
            cfg.paths.recon = get_or(p, "recon", cfg.paths.recon);
            cfg.paths.report = get_or(p, "report", cfg.paths.report);
            cfg.paths.percycle = get_or(p, "percycle", cfg.paths.percycle);
        }
    } catch (const json::exception& e) {
        fail(Err::InvalidParams, args.config_path + ": " + e.what());
    }

    if (args.seed) cfg.train.seed = *args.seed;
    if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0))
        fail(Err::InvalidParams, "split.train_ratio must lie in (0, 1)");
    if (cfg.variant != "xdjdl" && cfg.variant != "lc_xdjdl" && cfg.variant != "dct")
        fail(Err::InvalidParams, "train.variant must be xdjdl, lc_xdjdl or dct");

    const std::string& out = args.out_dir;
    if (!out.empty()) std::filesystem::create_directories(out);
    cfg.paths.record = join_path(out, cfg.paths.record);
    cfg.paths.truth = join_path(out, cfg.paths.truth);
    cfg.paths.cycles = join_path(out, cfg.paths.cycles);
    cfg.paths.labels = join_path(out, cfg.paths.labels);
    cfg.paths.model = join_path(out, cfg.paths.model);
    cfg.paths.recon = join_path(out, cfg.paths.recon);
    cfg.paths.report = join_path(out, cfg.paths.report);
    cfg.paths.percycle = join_path(out, cfg.paths.percycle);
    return cfg;
}

int exit_code_for(Err code) {
    switch (code) {
        case Err::IoError:
        case Err::BadMagic:
        case Err::UnsupportedVersion:
        case Err::CorruptEntryTable:
        case Err::ParseError:
            return exit_io;
        case Err::NonFiniteObjective:
        case Err::SingularSystem:
            return exit_numeric;
        default:
            return exit_config;
    }
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return exit_ok;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
}

Index train_count(Index n, double ratio) {
    const auto k = static_cast<Index>(std::ceil(ratio * double(n)));
    return std::min(n, std::max<Index>(1, k));
}

// effective per-cycle sample rate after resampling to d points
std::vector<double> effective_rates(const CyclePairSet& cycles, Index lo, Index hi) {
    std::vector<double> out;
    if (cycles.src_len.empty()) return out;
    out.reserve(static_cast<std::size_t>(hi - lo));
    for (Index j = lo; j < hi; ++j)
        out.push_back(double(cycles.d()) * cycles.fs / double(cycles.src_len[std::size_t(j)]));
    return out;
}

std::vector<int> labels_for(const CyclePairSet& cycles, const Paths& paths) {
    if (!cycles.labels.empty()) return cycles.labels;
    if (!paths.labels.empty()) return io::read_labels(paths.labels, cycles.n());
    fail(Err::InvalidParams, "label-consistent run needs labels (sidecar or paths.labels)");
}

Index infer_class_count(const std::vector<int>& labels, Index configured) {
    if (configured > 0) return configured;
    int mx = -1;
    for (int v : labels) mx = std::max(mx, v);
    if (mx < 0) fail(Err::InvalidParams, "cannot infer a class count from empty labels");
    return Index(mx) + 1;
}

json aggregate_json(const ev::Aggregate& a) {
    return json{{"mean", a.mean}, {"stddev", a.stddev}, {"median", a.median}};
}

} // namespace

int cmd_synth(const CommonArgs& args) {
    return guarded([&] {
        const RunConfig cfg = load_config(args);
        synth::EcgTemplateParams params;
        const json& s = cfg.synth;
        const double duration_s = get_or(s, "duration_s", 60.0);
        const double fs = get_or(s, "fs", 125.0);
        params.hr_bpm = get_or(s, "hr_bpm", params.hr_bpm);
        params.hr_jitter_pct = get_or(s, "hr_jitter_pct", params.hr_jitter_pct);
        params.noise_std = get_or(s, "noise_std", params.noise_std);
        params.ppg_offset_s = get_or(s, "ppg_offset_s", params.ppg_offset_s);
        params.seed = cfg.train.seed;
        if (s.contains("seed") && !args.seed) params.seed = s.at("seed").get<std::uint64_t>();
        if (!(params.hr_bpm > 0.0)) fail(Err::InvalidParams, "synth.hr_bpm must be positive");
        if (!(duration_s > 0.0)) fail(Err::InvalidParams, "synth.duration_s must be positive");
        if (!(fs > 0.0)) fail(Err::InvalidParams, "synth.fs must be positive");

        const synth::SyntheticRecord rec = synth::gen_synthetic_record(duration_s, fs, params);
        io::write_signals(cfg.paths.record, rec.record, true);

        json truth{{"fs", fs},
                   {"r", rec.truth.r},
                   {"p", rec.truth.p},
                   {"q", rec.truth.q},
                   {"s", rec.truth.s},
                   {"t", rec.truth.t},
                   {"onsets", rec.truth.onsets},
                   {"pr_s", rec.truth.pr_s},
                   {"qrs_s", rec.truth.qrs_s},
                   {"qt_s", rec.truth.qt_s}};
        std::ofstream tf(cfg.paths.truth, std::ios::trunc);
        if (!tf) fail(Err::IoError, "cannot open for writing: " + cfg.paths.truth);
        tf << truth.dump(2) << '\n';
        if (!tf.good()) fail(Err::IoError, "short write: " + cfg.paths.truth);
        std::cout << "wrote " << cfg.paths.record << " (" << rec.record.ppg.size()
                  << " samples) and " << cfg.paths.truth << "\n";
    });
}

int cmd_preprocess(const CommonArgs& args) {
    return guarded([&] {
        const RunConfig cfg = load_config(args);
        const RawRecord rec = io::read_signals(cfg.paths.record);
        const pre::BuildResult built = pre::build_dataset({rec}, cfg.preprocess);
        io::write_cycles(cfg.paths.cycles, built.cycles);
        std::cout << "wrote " << built.cycles.n() << " cycles (d=" << built.cycles.d()
                  << ", mode=" << built.cycles.mode << ", skipped "
                  << built.skipped_degenerate << " degenerate) to " << cfg.paths.cycles
                  << "_{ppg,ecg}.csv\n";
    });
}

int cmd_train(const CommonArgs& args) {
    return guarded([&] {
        const RunConfig cfg = load_config(args);
        const CyclePairSet cycles = io::read_cycles(cfg.paths.cycles);
        const Index n_train = train_count(cycles.n(), cfg.train_ratio);
        const Matrix X_e = cycles.ecg.leftCols(n_train);
        const Matrix X_p = cycles.ppg.leftCols(n_train);

        if (cfg.variant == "dct") {
            const infer::DctBaseline base =
                infer::train_dct_baseline(X_e, X_p, cfg.train.ridge_lambda);
            io::SavedModel out;
            out.variant = "dct";
            out.model.W = base.W_dct;
            out.model.hyper = cfg.train;
            io::save_model(cfg.paths.model, out);
            std::cout << "trained dct baseline on " << n_train << " cycles -> "
                      << cfg.paths.model << "\n";
            return;
        }

        if (cfg.variant == "lc_xdjdl") {
            std::vector<int> labels = labels_for(cycles, cfg.paths);
            labels.resize(static_cast<std::size_t>(n_train));
            const Index classes = infer_class_count(labels, cfg.class_count);
            const LcXdjdlModel model = dl::train_lc_xdjdl(X_e, X_p, labels, classes,
                                                          cfg.ones_per_class, cfg.train);
            io::save_model(cfg.paths.model, model);
            std::cout << "trained lc_xdjdl on " << n_train << " cycles ("
                      << model.base.trace.size() - 1 << " iterations, final objective "
                      << model.base.trace.back() << ") -> " << cfg.paths.model << "\n";
            return;
        }

        const XdjdlModel model = dl::train_xdjdl(X_e, X_p, cfg.train);
        io::save_model(cfg.paths.model, model);
        std::cout << "trained xdjdl on " << n_train << " cycles ("
                  << model.trace.size() - 1 << " iterations, final objective "
                  << model.trace.back() << ") -> " << cfg.paths.model << "\n";
    });
}

int cmd_infer(const CommonArgs& args) {
    return guarded([&] {
        const RunConfig cfg = load_config(args);
        const CyclePairSet cycles = io::read_cycles(cfg.paths.cycles);
        const io::SavedModel saved = io::load_model(cfg.paths.model);
        const Index n_train = train_count(cycles.n(), cfg.train_ratio);
        if (n_train >= cycles.n()) fail(Err::EmptyDataset, "no cycles left for testing");
        const Matrix T_p = cycles.ppg.rightCols(cycles.n() - n_train);

        Matrix recon;
        if (saved.variant == "dct") {
            infer::DctBaseline base{saved.model.W, saved.model.hyper.ridge_lambda};
            recon = infer::infer_dct_baseline(base, T_p);
        } else if (saved.variant == "lc_xdjdl") {
            if (!saved.H) fail(Err::CorruptEntryTable, "label-consistent model lacks H");
            std::vector<int> labels = labels_for(cycles, cfg.paths);
            const std::vector<int> test_labels(labels.begin() + n_train, labels.end());
            const Matrix Q = dl::build_q_matrix(test_labels, saved.class_count,
                                                saved.ones_per_class);
            LcXdjdlModel model;
            model.base = saved.model;
            model.H = *saved.H;
            model.class_count = saved.class_count;
            model.ones_per_class = saved.ones_per_class;
            recon = infer::infer_ecg_lc(model, T_p, Q).recon;
        } else if (saved.variant == "xdjdl") {
            recon = infer::infer_ecg(saved.model, T_p).recon;
        } else {
            fail(Err::UnsupportedVersion, "unknown model variant: " + saved.variant);
        }

        io::write_matrix_csv(cfg.paths.recon, recon);
        std::cout << "reconstructed " << recon.cols() << " cycles -> " << cfg.paths.recon
                  << "\n";
    });
}

int cmd_eval(const CommonArgs& args) {
    return guarded([&] {
        const RunConfig cfg = load_config(args);
        const CyclePairSet cycles = io::read_cycles(cfg.paths.cycles);
        const Matrix recon_raw = io::read_matrix_csv(cfg.paths.recon);
        const Index n_train = train_count(cycles.n(), cfg.train_ratio);
        if (n_train >= cycles.n()) fail(Err::EmptyDataset, "no cycles left for testing");
        const Index n_test = cycles.n() - n_train;
        const Matrix T_e = cycles.ecg.rightCols(n_test);
        if (recon_raw.rows() != T_e.rows() || recon_raw.cols() != n_test)
            fail(Err::ShapeMismatch, "reconstruction shape does not match the test slice");

        // onset-cut cycles place the R peak mid-cycle wherever the transit
        // delay put it; align each reconstruction before scoring
        Matrix recon = recon_raw;
        if (cycles.mode == "o2o") {
            for (Index j = 0; j < recon.cols(); ++j)
                recon.col(j) = infer::align_r_peak_offset(T_e.col(j), recon.col(j));
        }

        ev::EvalOptions opts;
        opts.fs_effective_per_cycle = effective_rates(cycles, n_train, cycles.n());
        const double fs_eff = opts.fs_effective_per_cycle.empty()
                                  ? cycles.fs
                                  : opts.fs_effective_per_cycle.front();
        const ev::EvalReport rep = ev::evaluate_batch(recon, T_e, fs_eff, opts);

        json report{{"n_cycles", cycles.n()},
                    {"n_train", n_train},
                    {"n_test", n_test},
                    {"split", {{"train_begin", 0}, {"train_end", n_train},
                               {"test_begin", n_train}, {"test_end", cycles.n()}}},
                    {"mode", cycles.mode},
                    {"n_excluded", rep.n_excluded},
                    {"rho", aggregate_json(rep.rho_agg)},
                    {"rrmse", aggregate_json(rep.rrmse_agg)},
                    {"effective_ratio", rep.effective_ratio},
                    {"spans_evaluated", rep.spans_evaluated}};
        if (rep.rho_p) report["rho_p"] = aggregate_json(*rep.rho_p);
        if (rep.rho_qrs) report["rho_qrs"] = aggregate_json(*rep.rho_qrs);
        if (rep.rho_t) report["rho_t"] = aggregate_json(*rep.rho_t);
        if (rep.rrmse_p) report["rrmse_p"] = aggregate_json(*rep.rrmse_p);
        if (rep.rrmse_qrs) report["rrmse_qrs"] = aggregate_json(*rep.rrmse_qrs);
        if (rep.rrmse_t) report["rrmse_t"] = aggregate_json(*rep.rrmse_t);
        json mae;
        if (rep.mae.pr) mae["pr_s"] = *rep.mae.pr;
        if (rep.mae.qrs) mae["qrs_s"] = *rep.mae.qrs;
        if (rep.mae.qt) mae["qt_s"] = *rep.mae.qt;
        mae["used_pr"] = rep.mae.used_pr;
        mae["used_qrs"] = rep.mae.used_qrs;
        mae["used_qt"] = rep.mae.used_qt;
        report["interval_mae"] = mae;

        std::ofstream rf(cfg.paths.report, std::ios::trunc);
        if (!rf) fail(Err::IoError, "cannot open for writing: " + cfg.paths.report);
        rf << report.dump(2) << '\n';
        if (!rf.good()) fail(Err::IoError, "short write: " + cfg.paths.report);

        std::ofstream pf(cfg.paths.percycle, std::ios::trunc);
        if (!pf) fail(Err::IoError, "cannot open for writing: " + cfg.paths.percycle);
        pf << "cycle_index,rho,rrmse,excluded\n";
        for (std::size_t j = 0; j < rep.rho.size(); ++j) {
            char buf[96];
            if (rep.excluded[j])
                std::snprintf(buf, sizeof(buf), "%lld,,,1\n",
                              static_cast<long long>(n_train + Index(j)));
            else
                std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,0\n",
                              static_cast<long long>(n_train + Index(j)), rep.rho[j],
                              rep.rrmse[j]);
            pf << buf;
        }
        if (!pf.good()) fail(Err::IoError, "short write: " + cfg.paths.percycle);

        const auto line = [](const char* name, const ev::Aggregate& a) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%-8s mean %8.4f  std %8.4f  median %8.4f\n",
                          name, a.mean, a.stddev, a.median);
            return std::string(buf);
        };
        std::cout << line("rho", rep.rho_agg) << line("rrmse", rep.rrmse_agg);
        const auto mae_line = [](const char* name, const std::optional<double>& v,
                                 std::size_t used) {
            char buf[128];
            if (v)
                std::snprintf(buf, sizeof(buf), "%-8s mae %8.2f ms (over %zu spans)\n", name,
                              *v * 1000.0, used);
            else
                std::snprintf(buf, sizeof(buf), "%-8s mae     n/a\n", name);
            return std::string(buf);
        };
        std::cout << mae_line("pr", rep.mae.pr, rep.mae.used_pr)
                  << mae_line("qrs", rep.mae.qrs, rep.mae.used_qrs)
                  << mae_line("qt", rep.mae.qt, rep.mae.used_qt);
        std::cout << "effective spans " << rep.n_effective << "/" << rep.spans_evaluated
                  << ", excluded cycles " << rep.n_excluded << "\n";
    });
}

int run_command(const std::string& name, const CommonArgs& args) {
    if (name == "synth") return cmd_synth(args);
    if (name == "preprocess") return cmd_preprocess(args);
    if (name == "train") return cmd_train(args);
    if (name == "infer") return cmd_infer(args);
    if (name == "eval") return cmd_eval(args);
    std::cerr << "error: unknown command '" << name << "'\n";
    return exit_config;
}

} // namespace xdjdl::cli
