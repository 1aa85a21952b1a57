// classical.hpp: symbolic dynamics of the open tri-baker map families
//
// The closed tri-baker map on the unit torus acts as a ternary Bernoulli
// shift on the bi-infinite word
//
//     ... e_{-2} e_{-1} . e_0 e_1 e_2 ...
//
// where q = 0.e_0 e_1 e_2 ... and p = 0.e_{-1} e_{-2} ... (base 3). One
// forward step moves the dot one place to the right. An "open" trit forbids
// the value 1; an opening is a set of such trits, and everything here is
// digit bookkeeping on that word.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tribaker/grid.hpp"

namespace tribaker {

struct TorusPoint {
    double q = 0.0;
    double p = 0.0;

    /// Reduces both coordinates mod 1 into [0, 1).
    static TorusPoint wrap(double q, double p);
};

enum class Direction { Forward, Backward };

/// (q, p) -> (3q - [3q], (p + [3q]) / 3), or its inverse.
TorusPoint closed_baker_step(TorusPoint point, Direction direction);

using Trit = std::uint8_t;

/// Finite ternary encoding of a torus point, l trits per coordinate.
///
/// q_trits()[i] is e_i (i = 0 .. l-1, most significant first) and
/// p_trits()[i] is e_{-(i+1)}.
class TritWord {
public:
    TritWord(std::vector<Trit> q_trits, std::vector<Trit> p_trits);

    /// Truncating encoding: the point lies in the returned 3^-l cell.
    static TritWord encode(TorusPoint point, int length);

    /// Centre of the 3^-l cell described by the word.
    TorusPoint decode() const;

    int length() const noexcept { return static_cast<int>(q_.size()); }
    const std::vector<Trit>& q_trits() const noexcept { return q_; }
    const std::vector<Trit>& p_trits() const noexcept { return p_; }

    /// Trit e_index for index in [-l, l-1]; index >= 0 reads q, < 0 reads p.
    Trit at(int index) const;

    bool operator==(const TritWord&) const = default;

private:
    std::vector<Trit> q_;
    std::vector<Trit> p_;
};

/// One Bernoulli shift. The new least-significant q trit is `filler`.
TritWord shift_step(const TritWord& word, Trit filler = 0);

enum class Family { Shift, Intersection };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/// Family tag, member index k and qutrit count l, with 1 <= k <= l.
struct OpeningSpec {
    Family family;
    int k;
    int l;

    /// Validating constructor; throws UsageError when k is out of range.
    static OpeningSpec make(Family family, int k, int l);

    /// Trit indices (in e_i numbering) that must differ from 1 for a word
    /// to be allowed.
    std::vector<int> forbidden_indices() const;
};

/// True iff no trit in the opening's forbidden set equals 1.
/// Throws ResolutionError if the word is shorter than k.
bool is_allowed(const TritWord& word, const OpeningSpec& spec);

/// Project-then-shift. std::nullopt means the word escaped.
std::optional<TritWord> open_map_step(const TritWord& word, const OpeningSpec& spec, Trit filler = 0);

/// Surviving area A_t for t = 1..T, with the exact count of constrained
/// trits kept alongside so that A_t = (2/3)^open_trits[t-1] holds exactly.
struct AreaSequence {
    std::vector<double> areas;
    std::vector<int> open_trits; // empty for Monte-Carlo estimates

    std::size_t size() const noexcept { return areas.size(); }
};

/// Largest T + 2k accepted by allowed_area_sequence.
inline constexpr int kMaxSymbolicDepth = 1000;

AreaSequence allowed_area_sequence(const OpeningSpec& spec, int steps);

/// Least-squares slope of -ln A_t over the last `tail` entries.
double escape_rate(const AreaSequence& areas, int tail);

/// Fraction of `samples` uniform points that survive t = 1..steps open steps,
/// iterated in floating point with closed_baker_step. The result depends only
/// on `seed`, not on how many worker threads run the chunks.
AreaSequence monte_carlo_area(const OpeningSpec& spec, int steps, std::int64_t samples, std::uint64_t seed);

/// Real-coordinate version of is_allowed, reading trits off (q, p) directly.
bool is_allowed(TorusPoint point, const OpeningSpec& spec);

/// Writes "t,area,log_area" rows.
std::string area_sequence_csv(const AreaSequence& areas);

/// Indicator of the finite-time repeller K_l on the grid of size D = 3^l:
/// 1 where every one of the l leading trits of q and of p differs from 1.
/// Throws UsageError when D is not 3^l.
PhaseGrid finite_time_repeller_mask(int l, int grid_size);

} // namespace tribaker
