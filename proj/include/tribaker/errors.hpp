#pragma once

#include <stdexcept>
#include <string>

namespace tribaker {

/// Bad arguments: out-of-range indices, malformed specs, shape mismatches.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested digit depth exceeds what the symbolic code supports.
class ResolutionError : public UsageError {
public:
    using UsageError::UsageError;
};

/// Right-eigenvector matrix too ill-conditioned for a diagonalizable treatment.
class DefectiveSpectrumError : public NumericalError {
public:
    DefectiveSpectrumError(const std::string& what, double condition)
        : NumericalError(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// A resonance whose left/right overlap is too small to build h_j.
class NearDefectiveError : public NumericalError {
public:
    NearDefectiveError(const std::string& what, int index, double overlap)
        : NumericalError(what), index_(index), overlap_(overlap) {}
    int index() const noexcept { return index_; }
    double overlap() const noexcept { return overlap_; }

private:
    int index_;
    double overlap_;
};

/// File does not parse, has a wrong magic/version, or fails its checksum.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tribaker
