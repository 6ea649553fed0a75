#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xdjdl/types.hpp"

namespace xdjdl::io {

// Binary model container: magic "XDJD", u16 version, JSON hyperparameter
// block, entry table (name, rows, cols, payload offset), row-major f64
// little-endian payloads. Round trips are bit exact.
struct SavedModel {
    std::string variant; // "xdjdl" | "lc_xdjdl"
    XdjdlModel model;
    std::optional<Matrix> H;
    Index class_count = 0;
    Index ones_per_class = 1;
};

void save_model(const std::string& path, const XdjdlModel& model);
void save_model(const std::string& path, const LcXdjdlModel& model);
// Generic form; writes whatever `variant` says (used for the dct baseline,
// which stores its coefficient map in the W slot).
void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

// Signal CSV: header "t,ppg,ecg" (t in seconds) or "ppg,ecg". With a time
// column the rate is inferred from it; otherwise default_fs applies.
RawRecord read_signals(const std::string& path, double default_fs = 0.0);
void write_signals(const std::string& path, const RawRecord& record, bool with_time);

// Cycle sets: <base>_ppg.csv and <base>_ecg.csv hold one d-row column per
// cycle; <base>.json carries {d, N, fs, mode, labels?, src_len?}.
void write_cycles(const std::string& base, const CyclePairSet& cycles);
CyclePairSet read_cycles(const std::string& base);

// Plain numeric matrix CSV (17 significant digits), one row per line.
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

// Label file: header `cycle_index,class_id`, one row per cycle. Reading
// requires a complete, duplicate-free assignment for cycles [0, n).
void write_labels(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels(const std::string& path, Index n);

} // namespace xdjdl::io
