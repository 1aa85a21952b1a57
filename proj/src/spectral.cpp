#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "tribaker/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tribaker/errors.hpp"

namespace tribaker {

namespace {

bool before(const Complex& a, const Complex& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

void require_vectors(const ResonanceSet& set, const char* who) {
    if (!set.has_vectors()) throw UsageError(std::string(who) + ": resonance set was computed without eigenvectors");
}

void require_index(const ResonanceSet& set, int j, const char* who) {
    if (j < 1 || j > set.dim())
        throw UsageError(std::string(who) + ": resonance index " + std::to_string(j) + " outside 1.." +
                         std::to_string(set.dim()));
}

double two_norm_condition(Eigen::MatrixXcd m) {
    const lapack_int n = static_cast<lapack_int>(m.rows());
    std::vector<double> sv(n);
    const lapack_int info =
        LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', n, n, m.data(), n, sv.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw NumericalError("eigendecompose: zgesdd failed with info=" + std::to_string(info));
    if (sv.empty() || !(sv.back() > 0.0)) return std::numeric_limits<double>::infinity();
    return sv.front() / sv.back();
}

} // namespace

double ResonanceSet::spectral_radius() const {
    double r = 0.0;
    for (const auto& z : eigenvalues) r = std::max(r, std::abs(z));
    return r;
}

std::vector<int> ResonanceSet::excluded_indices() const {
    std::vector<int> out;
    for (std::size_t j = 0; j < overlaps.size(); ++j)
        if (!(overlaps[j] >= kNearDefectiveOverlap)) out.push_back(static_cast<int>(j) + 1);
    return out;
}

double operator_norm2(const Eigen::MatrixXcd& m) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(m.cols()).normalized();
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXcd w = m.adjoint() * (m * v);
        const double n = w.norm();
        if (n == 0.0) return 0.0;
        const double next = std::sqrt(n);
        v = w / n;
        if (std::abs(next - sigma) <= 1e-14 * next) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

ResonanceSet eigendecompose(const ComplexOperator& map, const EigenOptions& options) {
    if (map.tag() != OperatorTag::OpenMap && map.tag() != OperatorTag::Unitary && map.tag() != OperatorTag::General)
        throw UsageError("eigendecompose: expected an open map, unitary or general operator");
    const int n = map.dim();

    Eigen::MatrixXcd a = map.matrix();
    std::vector<Complex> w(n);
    Eigen::MatrixXcd vl, vr;
    const char job = options.vectors ? 'V' : 'N';
    if (options.vectors) {
        vl.resize(n, n);
        vr.resize(n, n);
    }
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, job, job, n, a.data(), n, w.data(),
                                          options.vectors ? vl.data() : nullptr, n,
                                          options.vectors ? vr.data() : nullptr, n);
    if (info != 0) throw NumericalError("eigendecompose: zgeev failed with info=" + std::to_string(info));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return before(w[x], w[y]); });

    ResonanceSet set;
    set.eigenvalues.resize(n);
    for (int j = 0; j < n; ++j) set.eigenvalues[j] = w[order[j]];
    if (!options.vectors) return set;

    set.right.resize(n, n);
    set.left.resize(n, n);
    set.overlaps.resize(n);
    for (int j = 0; j < n; ++j) {
        const Eigen::VectorXcd r = vr.col(order[j]).normalized();
        const Eigen::VectorXcd l = vl.col(order[j]).normalized();
        const Complex ov = l.dot(r); // <l|r>, conjugate-linear in l
        set.right.col(j) = r;
        set.overlaps[j] = std::abs(ov);
        set.left.col(j) = ov != Complex{} ? Eigen::VectorXcd(l / std::conj(ov)) : l;
    }

    set.condition = two_norm_condition(set.right);

    const Eigen::MatrixXcd& b = map.matrix();
    const double bnorm = std::max(operator_norm2(b), std::numeric_limits<double>::min());
    const Eigen::MatrixXcd br = b * set.right;
    const Eigen::MatrixXcd lb = set.left.adjoint() * b;
    double res = 0.0, lres = 0.0;
    for (int j = 0; j < n; ++j) {
        const Complex lam = set.eigenvalues[j];
        res = std::max(res, (br.col(j) - lam * set.right.col(j)).norm() / bnorm);
        const double lnorm = set.left.col(j).norm();
        if (lnorm > 0.0)
            lres = std::max(lres, (lb.row(j) - lam * set.left.col(j).adjoint()).norm() / (lnorm * bnorm));
    }
    set.residual_max = res;
    set.left_residual_max = lres;

    if (options.policy == DefectivePolicy::Throw && !(set.condition <= kDefectiveCondition)) {
        std::ostringstream os;
        os << "eigendecompose: eigenvector matrix is numerically singular (condition " << std::scientific
           << set.condition << ")";
        throw DefectiveSpectrumError(os.str(), set.condition);
    }
    return set;
}

double biorthogonality_defect(const ResonanceSet& set, double threshold) {
    require_vectors(set, "biorthogonality_defect");
    Eigen::MatrixXcd lhat = set.left;
    for (Eigen::Index j = 0; j < lhat.cols(); ++j) lhat.col(j).normalize();
    const Eigen::MatrixXcd gram = lhat.adjoint() * set.right;
    double worst = 0.0;
    for (int j = 0; j < set.dim(); ++j)
        for (int k = 0; k < set.dim(); ++k)
            if (j != k && std::abs(set.eigenvalues[j] - set.eigenvalues[k]) > threshold)
                worst = std::max(worst, std::abs(gram(j, k)));
    return worst;
}

std::vector<double> decay_rates(const ResonanceSet& set) {
    std::vector<double> out;
    out.reserve(set.eigenvalues.size());
    for (const auto& z : set.eigenvalues) {
        const double m = std::abs(z);
        out.push_back(m == 0.0 ? std::numeric_limits<double>::infinity() : -2.0 * std::log(m));
    }
    return out;
}

long ModulusHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

int ModulusHistogram::mode() const {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

ModulusHistogram modulus_histogram(const ResonanceSet& set, int bins) {
    if (bins < 1) throw UsageError("modulus_histogram: bins must be >= 1");
    ModulusHistogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / bins;
    h.counts.assign(bins, 0);
    for (const auto& z : set.eigenvalues) {
        const double m = std::abs(z);
        const int bin = std::clamp(static_cast<int>(std::floor(m * bins)), 0, bins - 1);
        ++h.counts[bin];
    }
    return h;
}

EigenOperator resonance_operator(const ResonanceSet& set, int j) {
    require_vectors(set, "resonance_operator");
    require_index(set, j, "resonance_operator");
    const double ov = set.overlaps[j - 1];
    if (!(ov >= kNearDefectiveOverlap)) {
        std::ostringstream os;
        os << "resonance_operator: resonance " << j << " is near-defective (overlap " << std::scientific << ov << ")";
        throw NearDefectiveError(os.str(), j, ov);
    }
    // left is already scaled so that <L_j|R_j> = 1.
    Eigen::MatrixXcd h = set.right.col(j - 1) * set.left.col(j - 1).adjoint();
    return {ComplexOperator(std::move(h), OperatorTag::EigenOperator), j, EigenOperatorKind::Resonance};
}

EigenOperator cumulative_projector(const ResonanceSet& set, int j) {
    require_vectors(set, "cumulative_projector");
    require_index(set, j, "cumulative_projector");
    for (int i = 1; i <= j; ++i) {
        const double ov = set.overlaps[i - 1];
        if (!(ov >= kNearDefectiveOverlap)) {
            std::ostringstream os;
            os << "cumulative_projector: resonance " << i << " is near-defective (overlap " << std::scientific << ov
               << ")";
            throw NearDefectiveError(os.str(), i, ov);
        }
    }
    Eigen::MatrixXcd q = set.right.leftCols(j) * set.left.leftCols(j).adjoint();
    return {ComplexOperator(std::move(q), OperatorTag::EigenOperator), j, EigenOperatorKind::Cumulative};
}

std::string spectrum_csv(const ResonanceSet& set) {
    const auto gamma = decay_rates(set);
    std::ostringstream os;
    os << std::setprecision(17) << "j,re_lambda,im_lambda,modulus,gamma\n";
    for (int j = 0; j < set.dim(); ++j) {
        const auto& z = set.eigenvalues[j];
        os << j + 1 << ',' << z.real() << ',' << z.imag() << ',' << std::abs(z) << ',';
        if (std::isinf(gamma[j]))
            os << "inf";
        else
            os << gamma[j];
        os << '\n';
    }
    return os.str();
}

std::string histogram_csv(const ModulusHistogram& hist) {
    std::ostringstream os;
    os << std::setprecision(17) << "bin_lo,bin_hi,count\n";
    for (int i = 0; i < hist.bins(); ++i) os << hist.edges[i] << ',' << hist.edges[i + 1] << ',' << hist.counts[i] << '\n';
    return os.str();
}

} // namespace tribaker
