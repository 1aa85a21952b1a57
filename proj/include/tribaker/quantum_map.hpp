// quantum_map.hpp: BVS quantization of the tri-baker map and its openings
//
// Basis index j = 0 .. D-1 with half-integer phases (j + 1/2). On l qutrits
// (D = 3^l) the big-endian ternary digits of j are the position trits, so
// the most significant qutrit selects one of the three blocks of B_mix.

#pragma once

#include <complex>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tribaker/classical.hpp"

namespace tribaker {

using Complex = std::complex<double>;

enum class OperatorTag : std::uint8_t { Unitary = 0, Projector = 1, OpenMap = 2, EigenOperator = 3, General = 4 };
enum class Basis : std::uint8_t { Position = 0, Mixed = 1 };

std::string_view to_string(OperatorTag tag);
std::string_view to_string(Basis basis);

/// Dense D x D complex matrix with a semantic tag. Immutable once built.
class ComplexOperator {
public:
    ComplexOperator(Eigen::MatrixXcd matrix, OperatorTag tag, Basis basis = Basis::Position);

    int dim() const noexcept { return static_cast<int>(matrix_.rows()); }
    const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
    OperatorTag tag() const noexcept { return tag_; }
    Basis basis() const noexcept { return basis_; }

    /// max |(M^dagger M - I)_{ij}|
    double unitarity_defect() const;

private:
    Eigen::MatrixXcd matrix_;
    OperatorTag tag_;
    Basis basis_;
};

/// l qutrits, D = 3^l.
struct QutritRegister {
    int l;
    int dim;

    static QutritRegister make(int l);

    /// i-th most significant trit (1-based, as in Pi_i) of basis index j.
    int trit(int j, int i) const;
};

/// Largest qutrit count the dense constructions accept.
inline constexpr int kMaxQutrits = 7;

/// (G_D)_{j',j} = D^{-1/2} exp(-2 pi i (j' + 1/2)(j + 1/2) / D).
ComplexOperator antisymmetric_fourier(int dim);

/// diag(G_{D/3}, G_{D/3}, G_{D/3}) in the mixed representation.
ComplexOperator baker_mixed(int l);

/// G_D^dagger B_mix.
ComplexOperator baker_position(int l);

/// Diagonal of Pi_i: 0 where the i-th most significant trit of j is 1.
std::vector<double> qutrit_projector_diagonal(int i, int l);

/// Pi_i as a dense projector.
ComplexOperator qutrit_projector(int i, int l);

/// Diagonal of the projector used on both sides of B_mix by `spec`:
/// Pi_k for the shift family, Pi_1 ... Pi_k for the intersection family.
std::vector<double> opening_projector_diagonal(const OpeningSpec& spec);

/// Shift: G^dagger Pi_k B_mix Pi_k. Intersection: G^dagger (Pi_1..Pi_k) B_mix (Pi_k..Pi_1).
ComplexOperator open_map(const OpeningSpec& spec);

/// Binary layout, all integers little-endian:
///
///   offset  size  field
///        0     8  magic "TBAKEROP"
///        8     4  u32 format version (1)
///       12     4  u32 dimension D
///       16     1  u8 tag   (OperatorTag value)
///       17     1  u8 basis (Basis value)
///       18     6  zero padding
///       24    32  SHA-256 of the payload bytes
///       56  16D^2 payload: row-major entries, each (re, im) as IEEE-754 binary64
inline constexpr std::uint32_t kOperatorFormatVersion = 1;

void write_operator(std::ostream& out, const ComplexOperator& op);

/// Throws FormatError on bad magic, version, truncation or checksum mismatch.
ComplexOperator read_operator(std::istream& in);

} // namespace tribaker
