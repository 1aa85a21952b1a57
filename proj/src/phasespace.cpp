#include "tribaker/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "tribaker/classical.hpp"
#include "tribaker/errors.hpp"

namespace tribaker {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kImageCount = 2 * kCoherentImages + 1;

// Signed Gaussian weights (-1)^n exp(-pi D x^2) for every lattice site and
// image, x = q_j - q0 + n. Row-major [j][n].
std::vector<double> image_weights(double q0, int dim) {
    std::vector<double> g(static_cast<std::size_t>(dim) * kImageCount);
    for (int j = 0; j < dim; ++j) {
        const double qj = (j + 0.5) / dim;
        for (int i = 0; i < kImageCount; ++i) {
            const int n = i - kCoherentImages;
            const double x = qj - q0 + n;
            const double sign = (n % 2 == 0) ? 1.0 : -1.0;
            g[static_cast<std::size_t>(j) * kImageCount + i] = sign * std::exp(-kPi * dim * x * x);
        }
    }
    return g;
}

// Writes the normalized state at (q0, p0) into `out` using precomputed weights.
template <typename Out>
void fill_state(const std::vector<double>& weights, double q0, double p0, int dim, Out&& out) {
    Complex image_phase[kImageCount];
    for (int i = 0; i < kImageCount; ++i)
        image_phase[i] = std::polar(1.0, 2.0 * kPi * dim * p0 * (i - kCoherentImages));
    double norm2 = 0.0;
    for (int j = 0; j < dim; ++j) {
        const double qj = (j + 0.5) / dim;
        const double* w = &weights[static_cast<std::size_t>(j) * kImageCount];
        Complex s{};
        for (int i = 0; i < kImageCount; ++i) s += w[i] * image_phase[i];
        const Complex v = std::polar(1.0, 2.0 * kPi * dim * p0 * (qj - q0)) * s;
        out(j) = v;
        norm2 += std::norm(v);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int j = 0; j < dim; ++j) out(j) *= inv;
}

struct PowerSums {
    double s1 = 0.0;
    double s2 = 0.0;
    void add(double v) {
        s1 += v;
        s2 += v * v;
    }
};

// |h|_1 / |h|_2 with Riemann weights 1/G^2.
double l1_over_l2(const PowerSums& p, int grid) {
    return p.s1 / (static_cast<double>(grid) * std::sqrt(p.s2));
}

double ratio_to_nr(double ratio, double reference) {
    const double r = ratio / reference;
    return r * r;
}

void check_frame_dim(int dim, const CoherentFrame& frame, const char* who) {
    if (dim != frame.dim())
        throw UsageError(std::string(who) + ": operator dimension " + std::to_string(dim) +
                         " does not match frame dimension " + std::to_string(frame.dim()));
}

} // namespace

Eigen::VectorXcd coherent_state(double q0, double p0, int dim) {
    if (dim < 1) throw UsageError("coherent_state: dimension must be >= 1");
    const auto w = image_weights(q0, dim);
    Eigen::VectorXcd psi(dim);
    fill_state(w, q0, p0, dim, [&](int j) -> Complex& { return psi(j); });
    return psi;
}

CoherentFrame::CoherentFrame(int dim, int grid_size) : CoherentFrame(dim, grid_size, grid_size / 2, grid_size / 2) {}

CoherentFrame::CoherentFrame(int dim, int grid_size, int ref_a, int ref_b) : dim_(dim), grid_(grid_size) {
    if (dim < 1) throw UsageError("CoherentFrame: dimension must be >= 1");
    if (grid_size < 1) throw UsageError("CoherentFrame: grid size must be >= 1");
    if (ref_a < 0 || ref_a >= grid_size || ref_b < 0 || ref_b >= grid_size)
        throw UsageError("CoherentFrame: reference cell outside the grid");

    const Eigen::VectorXcd ref = coherent_state(center(ref_a), center(ref_b), dim);
    reference_ = PhaseGrid(grid_size);
    PowerSums sums;
    for (int a = 0; a < grid_size; ++a) {
        const Eigen::VectorXcd amp = row_states(a).conjugate() * ref;
        for (int b = 0; b < grid_size; ++b) {
            const double v = std::norm(amp(b));
            reference_(a, b) = v;
            sums.add(v);
        }
    }
    reference_ratio_ = l1_over_l2(sums, grid_size);
}

CoherentFrame CoherentFrame::with_reference_at(int a, int b) const { return CoherentFrame(dim_, grid_, a, b); }

Eigen::MatrixXcd CoherentFrame::row_states(int a) const {
    if (a < 0 || a >= grid_) throw UsageError("CoherentFrame::row_states: row outside the grid");
    const double q0 = center(a);
    const auto w = image_weights(q0, dim_);
    Eigen::MatrixXcd states(grid_, dim_);
    for (int b = 0; b < grid_; ++b)
        fill_state(w, q0, center(b), dim_, [&](int j) -> Complex& { return states(b, j); });
    return states;
}

int default_grid_size(int l) {
    int d = 1;
    for (int i = 0; i < l; ++i) d *= 3;
    return std::min(d, 243);
}

PhaseGrid husimi(const ComplexOperator& op, const CoherentFrame& frame) {
    check_frame_dim(op.dim(), frame, "husimi");
    const int g = frame.grid_size();
    PhaseGrid out(g);
    for (int a = 0; a < g; ++a) {
        const Eigen::MatrixXcd c = frame.row_states(a);
        const Eigen::MatrixXcd t = op.matrix() * c.transpose();
        for (int b = 0; b < g; ++b) out(a, b) = std::abs(c.row(b).dot(t.col(b).transpose()));
    }
    return out;
}

PhaseGrid husimi(const ResonanceSet& set, int j, const CoherentFrame& frame) {
    if (!set.has_vectors()) throw UsageError("husimi: resonance set has no eigenvectors");
    check_frame_dim(set.dim(), frame, "husimi");
    if (j < 1 || j > set.dim())
        throw UsageError("husimi: resonance index " + std::to_string(j) + " outside 1.." + std::to_string(set.dim()));
    if (!(set.overlaps[j - 1] >= kNearDefectiveOverlap))
        throw NearDefectiveError("husimi: resonance " + std::to_string(j) + " is near-defective", j,
                                 set.overlaps[j - 1]);
    const int g = frame.grid_size();
    PhaseGrid out(g);
    for (int a = 0; a < g; ++a) {
        const Eigen::MatrixXcd c = frame.row_states(a);
        const Eigen::VectorXcd cr = c.conjugate() * set.right.col(j - 1);
        const Eigen::VectorXcd lc = c * set.left.col(j - 1).conjugate();
        for (int b = 0; b < g; ++b) out(a, b) = std::abs(cr(b) * lc(b));
    }
    return out;
}

PhaseGrid husimi_cumulative(const ResonanceSet& set, int j, const CoherentFrame& frame) {
    if (!set.has_vectors()) throw UsageError("husimi_cumulative: resonance set has no eigenvectors");
    check_frame_dim(set.dim(), frame, "husimi_cumulative");
    if (j < 1 || j > set.dim())
        throw UsageError("husimi_cumulative: index " + std::to_string(j) + " outside 1.." +
                         std::to_string(set.dim()));
    for (int i = 1; i <= j; ++i)
        if (!(set.overlaps[i - 1] >= kNearDefectiveOverlap))
            throw NearDefectiveError("husimi_cumulative: resonance " + std::to_string(i) + " is near-defective", i,
                                     set.overlaps[i - 1]);
    const int g = frame.grid_size();
    PhaseGrid out(g);
    for (int a = 0; a < g; ++a) {
        const Eigen::MatrixXcd c = frame.row_states(a);
        const Eigen::MatrixXcd cr = c.conjugate() * set.right.leftCols(j);
        const Eigen::MatrixXcd lc = c * set.left.leftCols(j).conjugate();
        for (int b = 0; b < g; ++b) out(a, b) = std::abs((cr.row(b).array() * lc.row(b).array()).sum());
    }
    return out;
}

NormRatioReport norm_ratio(const PhaseGrid& grid, const CoherentFrame& frame) {
    if (grid.size() != frame.grid_size())
        throw UsageError("norm_ratio: grid size does not match the frame");
    PowerSums sums;
    for (double v : grid.values()) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("norm_ratio: grid values must be finite and >= 0");
        sums.add(v);
    }
    if (sums.s2 == 0.0) throw UsageError("norm_ratio: grid is identically zero");
    const double ref = frame.reference_ratio();
    const double uniform = ratio_to_nr(1.0, ref);
    const double half_dim = frame.dim() / 2.0;
    return NormRatioReport{ratio_to_nr(l1_over_l2(sums, grid.size()), ref), grid.size(), ref, uniform,
                           std::abs(uniform - half_dim) / half_dim};
}

RepellerOperator repeller_operator(int l, const CoherentFrame& frame) {
    int dim = 1;
    for (int i = 0; i < l; ++i) dim *= 3;
    if (l < 1 || frame.dim() != dim)
        throw UsageError("repeller_operator: frame dimension " + std::to_string(frame.dim()) + " is not 3^l");
    PhaseGrid mask = finite_time_repeller_mask(l, dim);

    std::vector<std::pair<int, int>> cells;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            if (mask(a, b) != 0.0) cells.emplace_back(a, b);

    Eigen::MatrixXcd states(dim, static_cast<Eigen::Index>(cells.size()));
    int last_a = -1;
    std::vector<double> w;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto [a, b] = cells[c];
        const double q0 = (a + 0.5) / dim;
        if (a != last_a) {
            w = image_weights(q0, dim);
            last_a = a;
        }
        fill_state(w, q0, (b + 0.5) / dim, dim, [&](int j) -> Complex& { return states(j, c); });
    }
    Eigen::MatrixXcd irep = states * states.adjoint();
    ComplexOperator op(std::move(irep), OperatorTag::General);
    PhaseGrid h = husimi(op, frame);
    const auto nr = norm_ratio(h, frame);
    return RepellerOperator{std::move(op), std::move(mask), std::move(h), nr};
}

HusimiNormRatios resonance_norm_ratios(const ResonanceSet& set, int count, const CoherentFrame& frame) {
    if (!set.has_vectors()) throw UsageError("resonance_norm_ratios: resonance set has no eigenvectors");
    check_frame_dim(set.dim(), frame, "resonance_norm_ratios");
    if (count < 1 || count > set.dim()) throw UsageError("resonance_norm_ratios: count outside 1..D");

    HusimiNormRatios out;
    std::vector<char> usable(count);
    int first_bad = count;
    for (int j = 0; j < count; ++j) {
        usable[j] = set.overlaps[j] >= kNearDefectiveOverlap;
        if (!usable[j]) {
            out.excluded.push_back(j + 1);
            first_bad = std::min(first_bad, j);
        }
    }

    std::vector<PowerSums> hs(count), qs(count);
    const int g = frame.grid_size();
    const Eigen::MatrixXcd right = set.right.leftCols(count);
    const Eigen::MatrixXcd left_conj = set.left.leftCols(count).conjugate();
    for (int a = 0; a < g; ++a) {
        const Eigen::MatrixXcd c = frame.row_states(a);
        const Eigen::MatrixXcd cr = c.conjugate() * right;
        const Eigen::MatrixXcd lc = c * left_conj;
        for (int b = 0; b < g; ++b) {
            Complex acc{};
            for (int j = 0; j < count; ++j) {
                const Complex v = cr(b, j) * lc(b, j);
                if (usable[j]) hs[j].add(std::abs(v));
                if (j < first_bad) {
                    acc += v;
                    qs[j].add(std::abs(acc));
                }
            }
        }
    }

    const double ref = frame.reference_ratio();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.nr_h.resize(count, nan);
    out.nr_q.resize(count, nan);
    for (int j = 0; j < count; ++j) {
        if (usable[j] && hs[j].s2 > 0.0) out.nr_h[j] = ratio_to_nr(l1_over_l2(hs[j], g), ref);
        if (j < first_bad && qs[j].s2 > 0.0) out.nr_q[j] = ratio_to_nr(l1_over_l2(qs[j], g), ref);
    }
    return out;
}

NrScanMember nr_scan_member(int k, const ResonanceSet& set, const std::vector<int>& m_values,
                            const CoherentFrame& frame) {
    if (m_values.empty()) throw UsageError("nr_scan: need at least one m value");
    const int m_max = std::min(*std::max_element(m_values.begin(), m_values.end()), set.dim());
    if (m_max < 1) throw UsageError("nr_scan: m values must be >= 1");

    NrScanMember member;
    member.k = k;
    member.condition = set.condition;
    member.residual_max = set.residual_max;
    member.ratios = resonance_norm_ratios(set, m_max, frame);
    for (int j = 0; j < m_max; ++j) member.modulus.push_back(std::abs(set.eigenvalues[j]));
    for (int m : m_values) {
        const int upto = std::min(m, m_max);
        double sum = 0.0;
        int n = 0;
        for (int j = 0; j < upto; ++j)
            if (!std::isnan(member.ratios.nr_h[j])) {
                sum += member.ratios.nr_h[j];
                ++n;
            }
        member.mean_nr[m] = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
    }
    return member;
}

NrScanTable nr_scan(Family family, int l, const std::vector<int>& members, const std::vector<int>& m_values,
                    const CoherentFrame& frame, double threshold, const SpectrumProvider& provider) {
    NrScanTable table{family, l, frame.grid_size(), threshold, m_values, {}};
    for (int k : members) {
        const auto spec = OpeningSpec::make(family, k, l);
        const ResonanceSet set =
            provider ? provider(spec) : eigendecompose(open_map(spec), {DefectivePolicy::Report, true});
        table.members.push_back(nr_scan_member(k, set, m_values, frame));
    }
    return table;
}

std::string nr_scan_csv(const NrScanTable& table) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto num = [&os](double v) {
        if (std::isnan(v))
            os << "nan";
        else
            os << v;
    };
    const auto fam = to_string(table.family);
    os << "kind,family,k,j,lambda_modulus,nr_h,nr_Q\n";
    for (const auto& m : table.members) {
        for (std::size_t j = 0; j < m.modulus.size(); ++j) {
            os << "state," << fam << ',' << m.k << ',' << j + 1 << ',';
            num(m.modulus[j]);
            os << ',';
            num(m.ratios.nr_h[j]);
            os << ',';
            num(m.ratios.nr_q[j]);
            os << '\n';
        }
        for (const auto& [mval, mean] : m.mean_nr) {
            const auto idx = std::min<std::size_t>(mval, m.ratios.nr_q.size()) - 1;
            os << "mean," << fam << ',' << m.k << ',' << mval << ",,";
            num(mean);
            os << ',';
            num(m.ratios.nr_q[idx]);
            os << '\n';
        }
    }
    os << "threshold," << fam << ",,,,";
    num(table.threshold);
    os << ",\n";
    return os.str();
}

} // namespace tribaker
