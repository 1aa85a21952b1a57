// spectral.hpp: resonances and eigenoperators of non-normal open maps

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "tribaker/quantum_map.hpp"

namespace tribaker {

/// Overlap |<L|R>| (both unit-normalized) below which h_j is not built.
inline constexpr double kNearDefectiveOverlap = 1e-10;

/// Eigenvalue pairs closer than this are exempt from biorthogonality checks.
inline constexpr double kDegeneracyThreshold = 1e-8;

/// Eigenvector-matrix condition number above which the spectrum is treated
/// as defective.
inline constexpr double kDefectiveCondition = 1e14;

enum class DefectivePolicy {
    Throw,  ///< raise DefectiveSpectrumError
    Report, ///< keep the decomposition; callers consult `condition` and overlaps
};

struct EigenOptions {
    DefectivePolicy policy = DefectivePolicy::Throw;
    bool vectors = true; ///< false: eigenvalues only (much cheaper at large D)
};

/// Full spectrum ordered by decreasing |lambda|, ties broken by descending
/// real then imaginary part.
///
/// right.col(j) is R_j with unit norm. left.col(j) is the paired left
/// eigenvector L_j (L_j^dagger B = lambda_j L_j^dagger), scaled so that
/// <L_j|R_j> = 1. overlaps[j] is |<L_j|R_j>| computed with both vectors
/// unit-normalized, i.e. the reciprocal eigenvalue condition number.
struct ResonanceSet {
    std::vector<Complex> eigenvalues;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    std::vector<double> overlaps;

    double condition = std::numeric_limits<double>::quiet_NaN();     ///< 1-norm condition of `right`
    double residual_max = std::numeric_limits<double>::quiet_NaN();  ///< max_j |B R_j - l_j R_j| / |B|_2
    double left_residual_max = std::numeric_limits<double>::quiet_NaN();

    int dim() const noexcept { return static_cast<int>(eigenvalues.size()); }
    bool has_vectors() const noexcept { return right.size() > 0; }
    double spectral_radius() const;

    /// 1-based indices whose overlap is below kNearDefectiveOverlap.
    std::vector<int> excluded_indices() const;
};

ResonanceSet eigendecompose(const ComplexOperator& map, const EigenOptions& options = {});

/// Power-iteration estimate of the largest singular value.
double operator_norm2(const Eigen::MatrixXcd& m);

/// max |<L^_j|R_j'>| over pairs with |l_j - l_j'| > threshold, L^ unit-normalized.
double biorthogonality_defect(const ResonanceSet& set, double threshold = kDegeneracyThreshold);

/// Gamma_j = -2 ln|lambda_j|; +infinity for lambda = 0.
std::vector<double> decay_rates(const ResonanceSet& set);

struct ModulusHistogram {
    std::vector<double> edges;   ///< bins + 1 uniform edges on [0, 1]
    std::vector<long> counts;

    int bins() const noexcept { return static_cast<int>(counts.size()); }
    long total() const;
    /// Index of the most populated bin (lowest index on ties).
    int mode() const;
};

/// |lambda| binned on [0, 1]; values >= 1 go to the last bin.
ModulusHistogram modulus_histogram(const ResonanceSet& set, int bins = 100);

enum class EigenOperatorKind { Resonance, Cumulative };

struct EigenOperator {
    ComplexOperator op;
    int index;  ///< 1-based resonance index j
    EigenOperatorKind kind;
};

/// h_j = |R_j><L_j| / <L_j|R_j>, j 1-based.
/// Throws NearDefectiveError when the pair's overlap is below threshold.
EigenOperator resonance_operator(const ResonanceSet& set, int j);

/// Q_j = h_1 + ... + h_j.
EigenOperator cumulative_projector(const ResonanceSet& set, int j);

/// "j,re_lambda,im_lambda,modulus,gamma" rows, j 1-based.
std::string spectrum_csv(const ResonanceSet& set);

/// "bin_lo,bin_hi,count" rows.
std::string histogram_csv(const ModulusHistogram& hist);

} // namespace tribaker
