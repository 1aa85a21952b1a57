#include "tribaker/classical.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "tribaker/errors.hpp"

namespace tribaker {

namespace {

double wrap_unit(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

int ipow3(int n) {
    int r = 1;
    for (int i = 0; i < n; ++i) r *= 3;
    return r;
}

// Trit e_index of a real point: index >= 0 reads q, index < 0 reads p.
Trit trit_of(TorusPoint point, int index) {
    const double x = index >= 0 ? point.q : point.p;
    const int depth = index >= 0 ? index + 1 : -index;
    const double scaled = std::floor(x * std::pow(3.0, depth));
    return static_cast<Trit>(std::fmod(scaled, 3.0));
}

} // namespace

TorusPoint TorusPoint::wrap(double q, double p) { return {wrap_unit(q), wrap_unit(p)}; }

TorusPoint closed_baker_step(TorusPoint point, Direction direction) {
    if (direction == Direction::Forward) {
        const double s = std::min(std::floor(3.0 * point.q), 2.0);
        return TorusPoint::wrap(3.0 * point.q - s, (point.p + s) / 3.0);
    }
    const double s = std::min(std::floor(3.0 * point.p), 2.0);
    return TorusPoint::wrap((point.q + s) / 3.0, 3.0 * point.p - s);
}

TritWord::TritWord(std::vector<Trit> q_trits, std::vector<Trit> p_trits)
    : q_(std::move(q_trits)), p_(std::move(p_trits)) {
    if (q_.empty() || q_.size() != p_.size())
        throw UsageError("TritWord: q and p trit sequences must have equal length >= 1");
    auto bad = [](Trit t) { return t > 2; };
    if (std::any_of(q_.begin(), q_.end(), bad) || std::any_of(p_.begin(), p_.end(), bad))
        throw UsageError("TritWord: trits must be 0, 1 or 2");
}

TritWord TritWord::encode(TorusPoint point, int length) {
    if (length < 1) throw UsageError("TritWord::encode: length must be >= 1");
    const TorusPoint w = TorusPoint::wrap(point.q, point.p);
    auto digits = [length](double x) {
        std::vector<Trit> out(length);
        for (auto& d : out) {
            x *= 3.0;
            const double f = std::min(std::floor(x), 2.0);
            d = static_cast<Trit>(f);
            x -= f;
        }
        return out;
    };
    return TritWord(digits(w.q), digits(w.p));
}

TorusPoint TritWord::decode() const {
    auto value = [](const std::vector<Trit>& ds) {
        double x = 0.0, scale = 1.0;
        for (Trit d : ds) {
            scale /= 3.0;
            x += d * scale;
        }
        return x + 0.5 * scale;
    };
    return {value(q_), value(p_)};
}

Trit TritWord::at(int index) const {
    const int l = length();
    if (index >= l || index < -l) throw ResolutionError("TritWord::at: trit index outside the word");
    return index >= 0 ? q_[index] : p_[-index - 1];
}

TritWord shift_step(const TritWord& word, Trit filler) {
    const auto& q = word.q_trits();
    const auto& p = word.p_trits();
    std::vector<Trit> nq(q.begin() + 1, q.end());
    nq.push_back(filler);
    std::vector<Trit> np;
    np.reserve(p.size());
    np.push_back(q.front());
    np.insert(np.end(), p.begin(), p.end() - 1);
    return TritWord(std::move(nq), std::move(np));
}

std::string_view to_string(Family family) {
    return family == Family::Shift ? "shift" : "intersection";
}

Family parse_family(std::string_view name) {
    if (name == "shift" || name == "s") return Family::Shift;
    if (name == "intersection" || name == "i") return Family::Intersection;
    throw UsageError("unknown family '" + std::string(name) + "' (expected shift or intersection)");
}

OpeningSpec OpeningSpec::make(Family family, int k, int l) {
    if (l < 1) throw UsageError("OpeningSpec: l must be >= 1");
    if (k < 1 || k > l)
        throw UsageError("OpeningSpec: member index k=" + std::to_string(k) + " outside 1.." + std::to_string(l));
    return OpeningSpec{family, k, l};
}

std::vector<int> OpeningSpec::forbidden_indices() const {
    if (family == Family::Shift) return {k - 1, -k};
    std::vector<int> out;
    out.reserve(2 * k);
    for (int i = 0; i < k; ++i) out.push_back(i);
    for (int i = 1; i <= k; ++i) out.push_back(-i);
    return out;
}

bool is_allowed(const TritWord& word, const OpeningSpec& spec) {
    if (word.length() < spec.k)
        throw ResolutionError("is_allowed: word of length " + std::to_string(word.length()) +
                              " cannot resolve member k=" + std::to_string(spec.k));
    for (int idx : spec.forbidden_indices())
        if (word.at(idx) == 1) return false;
    return true;
}

bool is_allowed(TorusPoint point, const OpeningSpec& spec) {
    for (int idx : spec.forbidden_indices())
        if (trit_of(point, idx) == 1) return false;
    return true;
}

std::optional<TritWord> open_map_step(const TritWord& word, const OpeningSpec& spec, Trit filler) {
    if (!is_allowed(word, spec)) return std::nullopt;
    return shift_step(word, filler);
}

AreaSequence allowed_area_sequence(const OpeningSpec& spec, int steps) {
    if (steps < 1) throw UsageError("allowed_area_sequence: need at least one step");
    if (steps + 2 * spec.k > kMaxSymbolicDepth)
        throw ResolutionError("allowed_area_sequence: T + 2k exceeds the supported depth of " +
                              std::to_string(kMaxSymbolicDepth) + " trits");
    // After s shifts the word's trit e_i is the initial trit e_{i+s}, so every
    // check can be recorded as a constraint on the initial word.
    const auto forbidden = spec.forbidden_indices();
    std::set<int> constrained;
    AreaSequence out;
    out.areas.reserve(steps);
    out.open_trits.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        for (int idx : forbidden) constrained.insert(idx + s);
        const int n = static_cast<int>(constrained.size());
        out.open_trits.push_back(n);
        out.areas.push_back(std::pow(2.0 / 3.0, n));
    }
    return out;
}

double escape_rate(const AreaSequence& areas, int tail) {
    const int n = static_cast<int>(areas.size());
    if (tail < 2 || n <= tail)
        throw UsageError("escape_rate: need 2 <= tail < number of areas");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = n - tail; i < n; ++i) {
        const double a = areas.areas[i];
        if (!(a > 0.0)) throw NumericalError("escape_rate: areas must be strictly positive");
        const double x = i + 1;
        const double y = -std::log(a);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (tail * sxy - sx * sy) / (tail * sxx - sx * sx);
}

AreaSequence monte_carlo_area(const OpeningSpec& spec, int steps, std::int64_t samples, std::uint64_t seed) {
    if (steps < 1) throw UsageError("monte_carlo_area: need at least one step");
    if (samples < 1) throw UsageError("monte_carlo_area: need at least one sample");

    constexpr std::int64_t kChunk = 1 << 16;
    const std::int64_t chunks = (samples + kChunk - 1) / kChunk;
    std::vector<std::vector<std::int64_t>> survivors(chunks, std::vector<std::int64_t>(steps, 0));

    auto run_chunk = [&](std::int64_t c) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::int64_t begin = c * kChunk;
        const std::int64_t end = std::min(samples, begin + kChunk);
        auto& counts = survivors[c];
        for (std::int64_t i = begin; i < end; ++i) {
            TorusPoint x{unit(rng), 0.0};
            x.p = unit(rng);
            for (int t = 0; t < steps; ++t) {
                if (!is_allowed(x, spec)) break;
                x = closed_baker_step(x, Direction::Forward);
                ++counts[t];
            }
        }
    };

    const auto workers = static_cast<std::int64_t>(std::max(1u, std::thread::hardware_concurrency()));
    if (workers == 1 || chunks == 1) {
        for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::jthread> pool;
        for (std::int64_t w = 0; w < std::min(workers, chunks); ++w)
            pool.emplace_back([&, w] {
                for (std::int64_t c = w; c < chunks; c += workers) run_chunk(c);
            });
    }

    AreaSequence out;
    out.areas.assign(steps, 0.0);
    for (int t = 0; t < steps; ++t) {
        std::int64_t total = 0;
        for (const auto& counts : survivors) total += counts[t];
        out.areas[t] = static_cast<double>(total) / static_cast<double>(samples);
    }
    return out;
}

std::string area_sequence_csv(const AreaSequence& areas) {
    std::ostringstream os;
    os << std::setprecision(17) << "t,area,log_area\n";
    for (std::size_t t = 0; t < areas.size(); ++t) {
        const double a = areas.areas[t];
        os << t + 1 << ',' << a << ',';
        if (a > 0.0)
            os << std::log(a);
        else
            os << "-inf";
        os << '\n';
    }
    return os.str();
}

PhaseGrid finite_time_repeller_mask(int l, int grid_size) {
    if (l < 1 || l > 12) throw UsageError("finite_time_repeller_mask: l must be in 1..12");
    const int expected = ipow3(l);
    if (grid_size != expected)
        throw UsageError("finite_time_repeller_mask: grid size " + std::to_string(grid_size) +
                         " is not 3^l = " + std::to_string(expected));
    // Cell a holds q in [a/D, (a+1)/D), whose l leading trits are those of a.
    std::vector<char> clean(grid_size);
    for (int a = 0; a < grid_size; ++a) {
        bool ok = true;
        for (int x = a, i = 0; i < l; ++i, x /= 3) ok = ok && (x % 3 != 1);
        clean[a] = ok;
    }
    PhaseGrid mask(grid_size);
    for (int a = 0; a < grid_size; ++a)
        for (int b = 0; b < grid_size; ++b) mask(a, b) = (clean[a] && clean[b]) ? 1.0 : 0.0;
    return mask;
}

} // namespace tribaker
