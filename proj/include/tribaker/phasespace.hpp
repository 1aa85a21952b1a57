// phasespace.hpp: coherent states, Husimi functions and the norm ratio
//
// Coherent states are periodized circular Gaussians with variance 1/(4 pi D)
// in both q and p, sampled on the anti-periodic position lattice
// q_j = (j + 1/2)/D. Husimi grids use the cell centres of a G x G grid.

#pragma once

#include <functional>
#include <map>
#include <vector>

#include "tribaker/grid.hpp"
#include "tribaker/spectral.hpp"

namespace tribaker {

/// Images summed on each side when periodizing a coherent state.
inline constexpr int kCoherentImages = 3;

/// Unit-norm position amplitudes of the coherent state centred at (q0, p0):
/// psi_j ~ sum_{n=-3..3} (-1)^n exp(-pi D x^2 + 2 pi i D p0 x), x = q_j - q0 + n.
Eigen::VectorXcd coherent_state(double q0, double p0, int dim);

/// Coherent states on the centres ((a + 1/2)/G, (b + 1/2)/G) of a G x G grid.
///
/// States are generated one q-row at a time rather than stored: at D = 729,
/// G = 243 the full set would need ~700 MB.
class CoherentFrame {
public:
    CoherentFrame(int dim, int grid_size);

    int dim() const noexcept { return dim_; }
    int grid_size() const noexcept { return grid_; }
    double center(int a) const { return (a + 0.5) / grid_; }

    /// G x D matrix whose row b is the coherent state at (center(a), center(b)).
    Eigen::MatrixXcd row_states(int a) const;

    /// Husimi |<c_ab|c_ref>|^2 of the reference coherent state centred on
    /// grid cell (ref_cell, ref_cell), ref_cell = G / 2 unless overridden.
    const PhaseGrid& reference() const noexcept { return reference_; }

    /// |rho_c|_1 / |rho_c|_2 of the reference on this grid.
    double reference_ratio() const noexcept { return reference_ratio_; }

    /// Same frame with the reference centred on cell (a, b).
    CoherentFrame with_reference_at(int a, int b) const;

private:
    CoherentFrame(int dim, int grid_size, int ref_a, int ref_b);

    int dim_;
    int grid_;
    PhaseGrid reference_;
    double reference_ratio_;
};

/// Default grid size: D for l <= 5, capped at 243 above.
int default_grid_size(int l);

/// |<c|A|c>| at every grid point.
PhaseGrid husimi(const ComplexOperator& op, const CoherentFrame& frame);

/// h_j via the factored form <c|R_j><L_j|c>/<L_j|R_j>; j 1-based.
/// Throws NearDefectiveError like resonance_operator.
PhaseGrid husimi(const ResonanceSet& set, int j, const CoherentFrame& frame);

/// Q_j via the same factored form, summed over the first j resonances.
PhaseGrid husimi_cumulative(const ResonanceSet& set, int j, const CoherentFrame& frame);

struct NormRatioReport {
    double nr;
    int grid_size;
    double reference_ratio;  ///< |rho_c|_1/|rho_c|_2 on the same grid
    double uniform_nr;       ///< nr of a flat grid on this frame (ideally D/2)
    double grid_error;       ///< |uniform_nr - D/2| / (D/2)
};

/// ((|h|_1/|h|_2) / (|rho_c|_1/|rho_c|_2))^2 with |h|_g = (sum h^g / G^2)^(1/g).
/// Throws UsageError on size mismatch or an all-zero grid.
NormRatioReport norm_ratio(const PhaseGrid& grid, const CoherentFrame& frame);

struct RepellerOperator {
    ComplexOperator op;    ///< I_rep = sum over the mask of |q_j,p_j'><q_j,p_j'|
    PhaseGrid mask;        ///< chi_l on the D x D lattice
    PhaseGrid husimi;      ///< on the frame's grid
    NormRatioReport nr;
};

/// Coherent-state quantization of the finite-time repeller K_l.
/// The sum runs over the D x D lattice; frame.dim() must equal 3^l.
RepellerOperator repeller_operator(int l, const CoherentFrame& frame);

/// nr of h_j and Q_j for j = 1..count, from one pass over the grid.
/// Entries for near-defective h_j are NaN; Q_j is NaN from the first
/// near-defective index on.
struct HusimiNormRatios {
    std::vector<double> nr_h;
    std::vector<double> nr_q;
    std::vector<int> excluded;
};

HusimiNormRatios resonance_norm_ratios(const ResonanceSet& set, int count, const CoherentFrame& frame);

struct NrScanMember {
    int k;
    std::vector<double> modulus;   ///< |lambda_j| for j = 1..max m
    HusimiNormRatios ratios;
    std::map<int, double> mean_nr; ///< m -> mean nr(h_j) over non-excluded j <= m
    double condition;
    double residual_max;
};

struct NrScanTable {
    Family family;
    int l;
    int grid_size;
    double threshold;  ///< nr(I_rep)
    std::vector<int> m_values;
    std::vector<NrScanMember> members;
};

/// Computes one member's row set from an already decomposed spectrum.
NrScanMember nr_scan_member(int k, const ResonanceSet& set, const std::vector<int>& m_values,
                            const CoherentFrame& frame);

/// Supplies the decomposed spectrum of a member (e.g. from a cache).
using SpectrumProvider = std::function<ResonanceSet(const OpeningSpec&)>;

/// Decomposes each requested member and collects nr statistics. Without a
/// provider the spectra are computed with DefectivePolicy::Report.
NrScanTable nr_scan(Family family, int l, const std::vector<int>& members, const std::vector<int>& m_values,
                    const CoherentFrame& frame, double threshold, const SpectrumProvider& provider = {});

/// "kind,family,k,j,lambda_modulus,nr_h,nr_Q" with kind in {state, mean, threshold}.
/// Mean rows carry j = m, nr_h = <nr>_m and nr_Q = nr(Q_m). The single
/// threshold row carries nr(I_rep) in nr_h.
std::string nr_scan_csv(const NrScanTable& table);

} // namespace tribaker
