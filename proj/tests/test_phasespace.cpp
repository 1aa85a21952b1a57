#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tribaker/errors.hpp"
#include "tribaker/phasespace.hpp"

using namespace tribaker;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

double max_diff(const PhaseGrid& a, const PhaseGrid& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
    return d;
}

} // namespace

TEST_CASE("coherent states") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double q = u(rng), p = u(rng);
        const auto c = coherent_state(q, p, 243);
        CHECK(std::abs(c.norm() - 1.0) < 1e-12);
        // Same state up to a global phase as the wider long-double sum.
        const auto ref = oracle::coherent(q, p, 243);
        CHECK(std::abs(std::abs(ref.dot(c)) - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(coherent_state(0.1, 0.1, 0), UsageError);
}

TEST_CASE("coherent-state overlaps follow the Gaussian law") {
    const int d = 243;
    const double q0 = 0.4, p0 = 0.3;
    const auto c0 = coherent_state(q0, p0, d);
    for (int step = 1; step <= 4; ++step) {
        const double delta = step * 0.25 / std::sqrt(static_cast<double>(d));
        const double expected = std::exp(-std::numbers::pi * d * delta * delta / 2.0);
        const double along_q = std::abs(coherent_state(q0 + delta, p0, d).dot(c0));
        const double along_p = std::abs(coherent_state(q0, p0 + delta, d).dot(c0));
        CHECK(along_q == doctest::Approx(expected).epsilon(1e-6));
        CHECK(along_p == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("overlap symmetry under q <-> p exchange") {
    const int d = 81;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double qa = u(rng), pa = u(rng), q0 = u(rng), p0 = u(rng);
        const double direct = std::abs(coherent_state(qa, pa, d).dot(coherent_state(q0, p0, d)));
        const double swapped = std::abs(coherent_state(pa, qa, d).dot(coherent_state(p0, q0, d)));
        CHECK(std::abs(direct - swapped) < 1e-10);
    }
}

TEST_CASE("frame rows are the coherent states of the grid") {
    const CoherentFrame frame(27, 9);
    for (int a : {0, 4, 8}) {
        const auto rows = frame.row_states(a);
        for (int b : {0, 3, 8}) {
            const Eigen::VectorXcd c = coherent_state(frame.center(a), frame.center(b), 27);
            CHECK((rows.row(b).transpose() - c).norm() < 1e-14);
        }
    }
    CHECK_THROWS_AS(frame.row_states(9), UsageError);
    CHECK(default_grid_size(3) == 27);
    CHECK(default_grid_size(5) == 243);
    CHECK(default_grid_size(6) == 243);
    CHECK(default_grid_size(7) == 243);
}

TEST_CASE("Husimi of the identity is flat") {
    const CoherentFrame frame(27, 27);
    const auto h = husimi(ComplexOperator(Eigen::MatrixXcd::Identity(27, 27), OperatorTag::General), frame);
    for (double v : h.values()) CHECK(std::abs(v - 1.0) < 1e-10);
    const auto nr = norm_ratio(h, frame);
    CHECK(nr.nr == doctest::Approx(nr.uniform_nr).epsilon(1e-12));
}

TEST_CASE("norm ratio calibration") {
    const int d = 243;
    const CoherentFrame frame(d, d);
    CHECK(norm_ratio(frame.reference(), frame).nr == 1.0);
    const auto nr = norm_ratio(PhaseGrid(d, 1.0), frame);
    CHECK(std::abs(nr.nr - d / 2.0) <= 0.02 * d / 2.0);
    CHECK(nr.grid_error <= 0.02);

    // A coherent state elsewhere on the grid has the same ratio.
    const auto moved = frame.with_reference_at(10, 200);
    CHECK(moved.reference_ratio() == doctest::Approx(frame.reference_ratio()).epsilon(1e-10));

    // Scale invariance.
    PhaseGrid h(d);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) h(a, b) = u(rng);
    PhaseGrid h4(d), h3(d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            h4(a, b) = 4.0 * h(a, b);
            h3(a, b) = 3.0 * h(a, b);
        }
    CHECK(norm_ratio(h4, frame).nr == norm_ratio(h, frame).nr);
    CHECK(norm_ratio(h3, frame).nr == doctest::Approx(norm_ratio(h, frame).nr).epsilon(1e-13));

    CHECK_THROWS_AS(norm_ratio(PhaseGrid(d, 0.0), frame), UsageError);
    CHECK_THROWS_AS(norm_ratio(PhaseGrid(9, 1.0), frame), UsageError);
}

TEST_CASE("projector onto a coherent state has nr 1") {
    const int d = 81;
    const CoherentFrame frame(d, d);
    const Eigen::VectorXcd c = coherent_state(frame.center(d / 2), frame.center(d / 2), d);
    const auto h = husimi(ComplexOperator(c * c.adjoint(), OperatorTag::Projector), frame);
    CHECK(norm_ratio(h, frame).nr == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("factored Husimi functions match the explicit operators") {
    const int l = 3, d = 27;
    const auto set = eigendecompose(open_map(OpeningSpec::make(Family::Shift, 2, l)), {DefectivePolicy::Report, true});
    const CoherentFrame frame(d, 18);
    for (int j : {1, 2, 5}) {
        const auto direct = husimi(resonance_operator(set, j).op, frame);
        const auto fact = husimi(set, j, frame);
        CHECK(max_diff(direct, fact) < 1e-12 * std::max(1.0, direct.max()));
        const auto qd = husimi(cumulative_projector(set, j).op, frame);
        const auto qf = husimi_cumulative(set, j, frame);
        CHECK(max_diff(qd, qf) < 1e-12 * std::max(1.0, qd.max()));
    }

    const auto ratios = resonance_norm_ratios(set, 6, frame);
    for (int j = 1; j <= 6; ++j) {
        CHECK(ratios.nr_h[j - 1] == doctest::Approx(norm_ratio(husimi(set, j, frame), frame).nr).epsilon(1e-12));
        CHECK(ratios.nr_q[j - 1] ==
              doctest::Approx(norm_ratio(husimi_cumulative(set, j, frame), frame).nr).epsilon(1e-12));
    }
    CHECK_THROWS_AS(husimi(set, 0, frame), UsageError);
    CHECK_THROWS_AS(husimi(set, d + 1, frame), UsageError);
    CHECK_THROWS_AS(husimi(set, 1, CoherentFrame(9, 9)), UsageError);
}

TEST_CASE("repeller operator") {
    for (int l = 1; l <= 4; ++l) {
        const int d = oracle::pow3(l);
        const auto rep = repeller_operator(l, CoherentFrame(d, d));
        const auto& m = rep.op.matrix();
        CHECK(max_abs(m - m.adjoint()) <= 1e-12);
        CHECK(std::abs(m.trace() - std::pow(4.0, l)) <= 1e-8);
        CHECK(rep.mask.count_nonzero() == static_cast<std::size_t>(std::pow(4, l)));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
        CHECK(rep.nr.nr > 1.0);
        CHECK(rep.nr.nr < rep.nr.uniform_nr);
    }
    CHECK_THROWS_AS(repeller_operator(3, CoherentFrame(9, 9)), UsageError);
}

TEST_CASE("repeller threshold at D=243 is pinned") {
    const auto rep = repeller_operator(5, CoherentFrame(243, 243));
    // Regression value from the first full run of this implementation.
    CHECK(rep.nr.nr == doctest::Approx(43.319854553970423).epsilon(1e-9));
}

TEST_CASE("long-lived resonances of wide openings sit on the repeller") {
    const int l = 4, d = 81;
    const CoherentFrame frame(d, d);
    const auto set = eigendecompose(open_map(OpeningSpec::make(Family::Shift, 1, l)), {DefectivePolicy::Report, true});
    const auto mask = finite_time_repeller_mask(l, d);
    const auto h = husimi(set, 1, frame);
    double in = 0.0, out = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double& side = mask(a, b) != 0.0 ? in : out;
            side = std::max(side, h(a, b));
        }
    CHECK(in > out);
}

TEST_CASE("nr scan table") {
    const int l = 3, d = 27;
    const CoherentFrame frame(d, d);
    const double thr = repeller_operator(l, frame).nr.nr;
    const auto table = nr_scan(Family::Shift, l, {1, 2, 3}, {5, 10}, frame, thr);
    REQUIRE(table.members.size() == 3);
    for (const auto& m : table.members) {
        CHECK(m.modulus.size() == 10);
        CHECK(m.mean_nr.size() == 2);
        double sum = 0.0;
        int n = 0;
        for (int j = 0; j < 5; ++j)
            if (!std::isnan(m.ratios.nr_h[j])) {
                sum += m.ratios.nr_h[j];
                ++n;
            }
        CHECK(m.mean_nr.at(5) == doctest::Approx(sum / n).epsilon(1e-14));
    }
    const auto csv = nr_scan_csv(table);
    CHECK(csv.rfind("kind,family,k,j,lambda_modulus,nr_h,nr_Q\n", 0) == 0);
    std::size_t thresholds = 0, states = 0, means = 0;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) {
        thresholds += line.rfind("threshold,", 0) == 0;
        states += line.rfind("state,", 0) == 0;
        means += line.rfind("mean,", 0) == 0;
    }
    CHECK(thresholds == 1);
    CHECK(states == 30);
    CHECK(means == 6);
}
