#include "tribaker/quantum_map.hpp"

#include <cmath>
#include <numbers>

#include "tribaker/errors.hpp"

namespace tribaker {

namespace {

void check_qutrits(int l, const char* who) {
    if (l < 1 || l > kMaxQutrits)
        throw UsageError(std::string(who) + ": qutrit count must be in 1.." + std::to_string(kMaxQutrits));
}

int dim_of(int l) {
    int d = 1;
    for (int i = 0; i < l; ++i) d *= 3;
    return d;
}

// G_D evaluated with the phase reduced exactly: (j'+1/2)(j+1/2)/D = m / (4D)
// with m = (2j'+1)(2j+1) taken mod 4D.
Eigen::MatrixXcd fourier_matrix(int dim) {
    const std::int64_t period = 4 * static_cast<std::int64_t>(dim);
    const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
    Eigen::MatrixXcd g(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            const std::int64_t m = ((2 * std::int64_t{r} + 1) * (2 * std::int64_t{c} + 1)) % period;
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(period);
            g(r, c) = std::polar(norm, angle);
        }
    return g;
}

// G^dagger * blockdiag(S_b G_M S_b) where S_b = diag(projector over block b).
Eigen::MatrixXcd sandwich_position(int l, const std::vector<double>& proj) {
    const int dim = dim_of(l);
    const int block = dim / 3;
    const Eigen::MatrixXcd gd_adj = fourier_matrix(dim).adjoint();
    const Eigen::MatrixXcd gm = fourier_matrix(block);
    Eigen::MatrixXcd out(dim, dim);
    for (int b = 0; b < 3; ++b) {
        const Eigen::Map<const Eigen::VectorXd> s(proj.data() + b * block, block);
        const Eigen::MatrixXcd inner = s.cast<Complex>().asDiagonal() * gm * s.cast<Complex>().asDiagonal();
        out.middleCols(b * block, block).noalias() = gd_adj.middleCols(b * block, block) * inner;
    }
    return out;
}

} // namespace

std::string_view to_string(OperatorTag tag) {
    switch (tag) {
    case OperatorTag::Unitary: return "unitary";
    case OperatorTag::Projector: return "projector";
    case OperatorTag::OpenMap: return "open-map";
    case OperatorTag::EigenOperator: return "eigen-operator";
    case OperatorTag::General: return "general";
    }
    return "unknown";
}

std::string_view to_string(Basis basis) { return basis == Basis::Position ? "position" : "mixed"; }

ComplexOperator::ComplexOperator(Eigen::MatrixXcd matrix, OperatorTag tag, Basis basis)
    : matrix_(std::move(matrix)), tag_(tag), basis_(basis) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
        throw UsageError("ComplexOperator: matrix must be square and non-empty");
}

double ComplexOperator::unitarity_defect() const {
    const Eigen::MatrixXcd prod = matrix_.adjoint() * matrix_;
    return (prod - Eigen::MatrixXcd::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

QutritRegister QutritRegister::make(int l) {
    check_qutrits(l, "QutritRegister");
    return {l, dim_of(l)};
}

int QutritRegister::trit(int j, int i) const {
    if (i < 1 || i > l) throw UsageError("QutritRegister::trit: qutrit index outside 1..l");
    if (j < 0 || j >= dim) throw UsageError("QutritRegister::trit: basis index outside 0..D-1");
    for (int s = i; s < l; ++s) j /= 3;
    return j % 3;
}

ComplexOperator antisymmetric_fourier(int dim) {
    if (dim <= 0) throw UsageError("antisymmetric_fourier: dimension must be positive");
    return ComplexOperator(fourier_matrix(dim), OperatorTag::Unitary, Basis::Position);
}

ComplexOperator baker_mixed(int l) {
    check_qutrits(l, "baker_mixed");
    const int dim = dim_of(l);
    const int block = dim / 3;
    const Eigen::MatrixXcd gm = fourier_matrix(block);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (int b = 0; b < 3; ++b) m.block(b * block, b * block, block, block) = gm;
    return ComplexOperator(std::move(m), OperatorTag::Unitary, Basis::Mixed);
}

ComplexOperator baker_position(int l) {
    check_qutrits(l, "baker_position");
    const std::vector<double> ones(dim_of(l), 1.0);
    return ComplexOperator(sandwich_position(l, ones), OperatorTag::Unitary, Basis::Position);
}

std::vector<double> qutrit_projector_diagonal(int i, int l) {
    const auto reg = QutritRegister::make(l);
    if (i < 1 || i > l)
        throw UsageError("qutrit_projector: index " + std::to_string(i) + " outside 1.." + std::to_string(l));
    std::vector<double> diag(reg.dim);
    for (int j = 0; j < reg.dim; ++j) diag[j] = reg.trit(j, i) == 1 ? 0.0 : 1.0;
    return diag;
}

ComplexOperator qutrit_projector(int i, int l) {
    const auto diag = qutrit_projector_diagonal(i, l);
    const Eigen::Map<const Eigen::VectorXd> d(diag.data(), static_cast<Eigen::Index>(diag.size()));
    return ComplexOperator(d.cast<Complex>().asDiagonal().toDenseMatrix(), OperatorTag::Projector, Basis::Position);
}

std::vector<double> opening_projector_diagonal(const OpeningSpec& spec) {
    check_qutrits(spec.l, "open_map");
    const auto valid = OpeningSpec::make(spec.family, spec.k, spec.l);
    if (valid.family == Family::Shift) return qutrit_projector_diagonal(valid.k, valid.l);
    std::vector<double> diag(dim_of(valid.l), 1.0);
    for (int i = 1; i <= valid.k; ++i) {
        const auto pi = qutrit_projector_diagonal(i, valid.l);
        for (std::size_t j = 0; j < diag.size(); ++j) diag[j] *= pi[j];
    }
    return diag;
}

ComplexOperator open_map(const OpeningSpec& spec) {
    const auto proj = opening_projector_diagonal(spec);
    return ComplexOperator(sandwich_position(spec.l, proj), OperatorTag::OpenMap, Basis::Position);
}

} // namespace tribaker
