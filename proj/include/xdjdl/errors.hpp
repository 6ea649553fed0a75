#pragma once

#include <stdexcept>
#include <string>

namespace xdjdl {

// Structured error codes. Every throwing code path in the library raises
// Error with one of these, so callers (and the CLI exit-code mapping) can
// dispatch without string matching.
enum class Err {
    // shape / parameter problems
    DimensionMismatch,
    ShapeMismatch,
    InvalidParams,
    SparsityExceedsAtoms,
    TooFewSamples,
    LabelOutOfRange,
    CombinatorialGuard,

    // signal / dataset problems
    SequenceTooShort,
    InsufficientPeaks,
    DegenerateCycle,
    DegenerateInput,
    EmptyDataset,
    EmptyAfterExclusion,
    MissingFiducials,

    // numeric problems
    SingularSystem,
    NonFiniteObjective,

    // persistence / parsing problems
    IoError,
    BadMagic,
    UnsupportedVersion,
    CorruptEntryTable,
    ParseError,
};

const char* err_name(Err code);

class Error : public std::runtime_error {
  public:
    Error(Err code, const std::string& what_arg)
        : std::runtime_error(std::string(err_name(code)) + ": " + what_arg), code_(code) {}

    Err code() const { return code_; }

  private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

} // namespace xdjdl
