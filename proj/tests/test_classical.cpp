#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tribaker/classical.hpp"
#include "tribaker/errors.hpp"

using namespace tribaker;

namespace {

int digit(double x, int depth) { return static_cast<int>(std::fmod(std::floor(x * std::pow(3.0, depth)), 3.0)); }

std::pair<double, double> baker(std::pair<double, double> x) {
    const double s = std::floor(3.0 * x.first);
    return {3.0 * x.first - s, (x.second + s) / 3.0};
}

// Direct digit test of the opening, independent of forbidden_indices().
bool open_digit_free(std::pair<double, double> x, Family f, int k) {
    if (f == Family::Shift) return digit(x.first, k) != 1 && digit(x.second, k) != 1;
    for (int d = 1; d <= k; ++d)
        if (digit(x.first, d) == 1 || digit(x.second, d) == 1) return false;
    return true;
}

} // namespace

TEST_CASE("closed map on sample points") {
    auto a = closed_baker_step({0.0, 0.0}, Direction::Forward);
    CHECK(a.q == 0.0);
    CHECK(a.p == 0.0);
    auto b = closed_baker_step({0.5, 0.5}, Direction::Forward);
    CHECK(b.q == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(b.p == doctest::Approx(0.5).epsilon(1e-15));
    // 3q - [3q] = 0 and (p + 2)/3 = 2/3.
    auto c = closed_baker_step({2.0 / 3.0, 0.0}, Direction::Forward);
    CHECK(c.q == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(c.p == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("forward and backward steps are inverse") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const TorusPoint x{u(rng), u(rng)};
        const auto y = closed_baker_step(closed_baker_step(x, Direction::Forward), Direction::Backward);
        CHECK(std::abs(y.q - x.q) < 1e-14);
        CHECK(std::abs(y.p - x.p) < 1e-14);
    }
}

TEST_CASE("shift step on trit words") {
    const TritWord zero({0, 0}, {0, 0});
    CHECK(shift_step(zero) == zero);

    const auto w = shift_step(TritWord({2, 1}, {0, 2}));
    CHECK(w.q_trits()[0] == 1);
    CHECK(w.p_trits() == std::vector<Trit>{2, 0});

    const auto one = shift_step(TritWord({1}, {2}));
    CHECK(one.p_trits() == std::vector<Trit>{1});
}

TEST_CASE("shift step agrees with the closed map on cell centres") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const TorusPoint x{u(rng), u(rng)};
        const auto word = TritWord::encode(x, 20);
        const auto img = shift_step(word).decode();
        const auto ref = closed_baker_step(word.decode(), Direction::Forward);
        // Only the dropped/filled trits differ: q loses resolution 3^-19,
        // p gains one trit so the truncated tail shows at 3^-21.
        CHECK(std::abs(img.q - ref.q) < 2.0 * std::pow(3.0, -19));
        CHECK(std::abs(img.p - ref.p) < 2.0 * std::pow(3.0, -21));
    }
}

TEST_CASE("encode and decode") {
    const auto w = TritWord::encode({0.5, 1.0 / 3.0 + 1e-9}, 6);
    CHECK(w.q_trits() == std::vector<Trit>{1, 1, 1, 1, 1, 1});
    CHECK(w.p_trits()[0] == 1);
    CHECK(w.at(0) == 1);
    CHECK(w.at(-1) == 1);
    CHECK_THROWS_AS(w.at(6), ResolutionError);
    CHECK_THROWS_AS(TritWord({0, 3}, {0, 0}), UsageError);
    CHECK_THROWS_AS(TritWord({0}, {0, 0}), UsageError);
}

TEST_CASE("allowed-word predicate") {
    // e_0 = 1 escapes shift k=1.
    CHECK_FALSE(is_allowed(TritWord({1, 0}, {0, 0}), OpeningSpec::make(Family::Shift, 1, 2)));
    // Shift k=2 inspects only e_1 and e_{-2}.
    CHECK(is_allowed(TritWord({1, 0}, {0, 2}), OpeningSpec::make(Family::Shift, 2, 2)));
    // Intersection k=2: e_{-2} = 1 forbids.
    CHECK_FALSE(is_allowed(TritWord({0, 2}, {0, 1}), OpeningSpec::make(Family::Intersection, 2, 2)));
    CHECK_THROWS_AS(is_allowed(TritWord({0}, {0}), OpeningSpec::make(Family::Shift, 2, 3)), ResolutionError);
}

TEST_CASE("open map step") {
    const auto spec = OpeningSpec::make(Family::Shift, 1, 3);
    const TritWord zero({0, 0, 0}, {0, 0, 0});
    REQUIRE(open_map_step(zero, spec).has_value());
    CHECK(*open_map_step(zero, spec) == zero);
    CHECK_FALSE(open_map_step(TritWord({1, 0, 0}, {0, 0, 0}), spec).has_value());

    // For k=1 the image's e_{-1} is the pre-image's e_0, so a check after
    // the step adds nothing to the check before it.
    for (int q0 = 0; q0 < 3; ++q0)
        for (int p0 = 0; p0 < 3; ++p0) {
            const TritWord w({static_cast<Trit>(q0), 0, 0}, {static_cast<Trit>(p0), 0, 0});
            const auto img = open_map_step(w, spec);
            if (img) CHECK(img->at(-1) != 1);
        }
}

TEST_CASE("family parsing and spec validation") {
    CHECK(parse_family("shift") == Family::Shift);
    CHECK(parse_family("i") == Family::Intersection);
    CHECK_THROWS_AS(parse_family("union"), UsageError);
    CHECK_THROWS_AS(OpeningSpec::make(Family::Shift, 0, 3), UsageError);
    CHECK_THROWS_AS(OpeningSpec::make(Family::Shift, 4, 3), UsageError);
}

TEST_CASE("exact areas match digit tracing on a cell grid") {
    struct Case {
        Family f;
        int k, steps;
    };
    for (const auto& c : {Case{Family::Shift, 1, 5}, Case{Family::Shift, 2, 5}, Case{Family::Shift, 3, 4},
                          Case{Family::Intersection, 1, 5}, Case{Family::Intersection, 2, 4},
                          Case{Family::Intersection, 3, 3}}) {
        CAPTURE(c.k);
        const auto spec = OpeningSpec::make(c.f, c.k, 3);
        const auto exact = allowed_area_sequence(spec, c.steps);
        const auto traced = oracle::cell_survival(
            c.k + c.steps - 1, c.k, c.steps, [&](auto x) { return open_digit_free(x, c.f, c.k); }, baker);
        for (int t = 0; t < c.steps; ++t) CHECK(exact.areas[t] == doctest::Approx(traced[t]).epsilon(1e-12));
    }
}

TEST_CASE("area laws") {
    SUBCASE("shift k=1 loses one trit per step after the first") {
        const auto a = allowed_area_sequence(OpeningSpec::make(Family::Shift, 1, 5), 10);
        for (int t = 1; t <= 10; ++t) CHECK(a.areas[t - 1] == doctest::Approx(std::pow(2.0 / 3.0, t + 1)).epsilon(1e-14));
    }
    SUBCASE("intersection opens 2k trits on the first step") {
        for (int k = 1; k <= 5; ++k) {
            const auto a = allowed_area_sequence(OpeningSpec::make(Family::Intersection, k, 5), 4);
            CHECK(a.open_trits[0] == 2 * k);
            CHECK(a.areas[0] == std::pow(2.0 / 3.0, 2 * k));
            for (int t = 1; t < 4; ++t) CHECK(a.open_trits[t] == a.open_trits[t - 1] + 1);
        }
    }
    SUBCASE("shift k>=2 loses (2/3)^2 per step while the constraints are disjoint") {
        for (int k = 2; k <= 5; ++k) {
            const auto a = allowed_area_sequence(OpeningSpec::make(Family::Shift, k, 5), 3 * k);
            for (int t = 1; t <= 2 * k - 1; ++t) CHECK(a.open_trits[t - 1] == 2 * t);
            for (int t = 2 * k; t <= 3 * k; ++t) CHECK(a.open_trits[t - 1] == t + 2 * k - 1);
        }
    }
}

TEST_CASE("escape rate") {
    AreaSequence geo;
    for (int t = 1; t <= 10; ++t) geo.areas.push_back(std::pow(2.0 / 3.0, t));
    CHECK(escape_rate(geo, 5) == doctest::Approx(std::log(1.5)).epsilon(1e-13));
    for (auto f : {Family::Shift, Family::Intersection}) {
        const auto a = allowed_area_sequence(OpeningSpec::make(f, 3, 5), 20);
        CHECK(std::abs(escape_rate(a, 5) - std::log(1.5)) <= 1e-12);
    }
    CHECK_THROWS_AS(escape_rate(geo, 1), UsageError);
    CHECK_THROWS_AS(escape_rate(geo, 10), UsageError);
    AreaSequence dead{{0.5, 0.25, 0.0}, {}};
    CHECK_THROWS_AS(escape_rate(dead, 2), NumericalError);
}

TEST_CASE("Monte-Carlo areas agree with the exact sequence") {
    constexpr std::int64_t n = 1'000'000;
    const auto check = [&](const OpeningSpec& spec, int steps, double nsigma) {
        const auto exact = allowed_area_sequence(spec, steps);
        const auto mc = monte_carlo_area(spec, steps, n, 42);
        for (int t = 0; t < steps; ++t) {
            const double a = exact.areas[t];
            const double sigma = std::sqrt(a * (1 - a) / n);
            CHECK(std::abs(mc.areas[t] - a) <= nsigma * sigma);
        }
    };
    check(OpeningSpec::make(Family::Shift, 1, 3), 1, 3.0);
    check(OpeningSpec::make(Family::Intersection, 2, 3), 1, 3.0);
    check(OpeningSpec::make(Family::Shift, 3, 5), 12, 4.0);
}

TEST_CASE("Monte-Carlo determinism and degenerate sample counts") {
    const auto spec = OpeningSpec::make(Family::Shift, 2, 3);
    const auto a = monte_carlo_area(spec, 6, 200'000, 5);
    const auto b = monte_carlo_area(spec, 6, 200'000, 5);
    const auto c = monte_carlo_area(spec, 6, 200'000, 6);
    CHECK(a.areas == b.areas);
    CHECK(a.areas != c.areas);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (double v : monte_carlo_area(spec, 4, 1, seed).areas) CHECK((v == 0.0 || v == 1.0));
    CHECK_THROWS_AS(monte_carlo_area(spec, 0, 10, 1), UsageError);
    CHECK_THROWS_AS(monte_carlo_area(spec, 3, 0, 1), UsageError);
}

TEST_CASE("finite-time repeller mask") {
    for (int l = 1; l <= 5; ++l) {
        const int d = oracle::pow3(l);
        const auto m = finite_time_repeller_mask(l, d);
        CHECK(m.count_nonzero() == static_cast<std::size_t>(std::pow(4, l)));
        CHECK(m.transposed().values() == m.values());
    }
    const auto m1 = finite_time_repeller_mask(1, 3);
    CHECK(m1(0, 0) == 1.0);
    CHECK(m1(1, 0) == 0.0);
    CHECK(m1(2, 2) == 1.0);
    CHECK_THROWS_AS(finite_time_repeller_mask(2, 10), UsageError);
}

TEST_CASE("area CSV") {
    const auto csv = area_sequence_csv(allowed_area_sequence(OpeningSpec::make(Family::Shift, 1, 2), 2));
    CHECK(csv.rfind("t,area,log_area\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
