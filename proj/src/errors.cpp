#include "xdjdl/errors.hpp"

namespace xdjdl {

const char* err_name(Err code) {
    switch (code) {
        case Err::DimensionMismatch: return "DimensionMismatch";
        case Err::ShapeMismatch: return "ShapeMismatch";
        case Err::InvalidParams: return "InvalidParams";
        case Err::SparsityExceedsAtoms: return "SparsityExceedsAtoms";
        case Err::TooFewSamples: return "TooFewSamples";
        case Err::LabelOutOfRange: return "LabelOutOfRange";
        case Err::CombinatorialGuard: return "CombinatorialGuard";
        case Err::SequenceTooShort: return "SequenceTooShort";
        case Err::InsufficientPeaks: return "InsufficientPeaks";
        case Err::DegenerateCycle: return "DegenerateCycle";
        case Err::DegenerateInput: return "DegenerateInput";
        case Err::EmptyDataset: return "EmptyDataset";
        case Err::EmptyAfterExclusion: return "EmptyAfterExclusion";
        case Err::MissingFiducials: return "MissingFiducials";
        case Err::SingularSystem: return "SingularSystem";
        case Err::NonFiniteObjective: return "NonFiniteObjective";
        case Err::IoError: return "IoError";
        case Err::BadMagic: return "BadMagic";
        case Err::UnsupportedVersion: return "UnsupportedVersion";
        case Err::CorruptEntryTable: return "CorruptEntryTable";
        case Err::ParseError: return "ParseError";
    }
    return "Error";
}

} // namespace xdjdl
