#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "tribaker/errors.hpp"
#include "tribaker/quantum_map.hpp"

using namespace tribaker;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::MatrixXcd diag_of(const std::vector<double>& d) {
    Eigen::VectorXcd v(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) v(i) = d[i];
    return v.asDiagonal();
}

} // namespace

TEST_CASE("anti-periodic Fourier matrix") {
    const auto g1 = antisymmetric_fourier(1).matrix();
    CHECK(std::abs(g1(0, 0) - Complex(0, -1)) < 1e-15);
    for (int d : {2, 3, 9, 27, 81, 243}) {
        CAPTURE(d);
        const auto g = antisymmetric_fourier(d);
        CHECK(max_abs(g.matrix() - oracle::fourier(d)) < 1e-13);
        CHECK(g.unitarity_defect() < 1e-12);
        CHECK((g.matrix().cwiseAbs().array() - 1.0 / std::sqrt(d)).abs().maxCoeff() < 1e-15);
    }
    CHECK(antisymmetric_fourier(3).unitarity_defect() <= 1e-14);
    CHECK_THROWS_AS(antisymmetric_fourier(0), UsageError);
}

TEST_CASE("mixed-basis baker is three Fourier blocks") {
    const auto b1 = baker_mixed(1).matrix();
    CHECK(max_abs(b1 - Complex(0, -1) * Eigen::MatrixXcd::Identity(3, 3)) < 1e-15);
    for (int l = 2; l <= 5; ++l) {
        const int d = oracle::pow3(l);
        const auto b = baker_mixed(l);
        CHECK(b.basis() == Basis::Mixed);
        CHECK(max_abs(b.matrix() - oracle::kron(Eigen::MatrixXcd::Identity(3, 3), oracle::fourier(d / 3))) < 1e-13);
        CHECK(b.unitarity_defect() < 1e-13);
    }
}

TEST_CASE("position-basis closed baker") {
    for (int l = 1; l <= 5; ++l) {
        const int d = oracle::pow3(l);
        const auto b = baker_position(l);
        const Eigen::MatrixXcd ref = oracle::fourier(d).adjoint() * baker_mixed(l).matrix();
        CHECK(max_abs(b.matrix() - ref) < 1e-12);
        CHECK(b.unitarity_defect() <= 1e-11);
        CHECK(std::abs(std::abs(b.matrix().determinant()) - 1.0) < 1e-9);
    }
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(baker_position(1).matrix());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(std::abs(es.eigenvalues()(i)) - 1.0) < 1e-12);
}

TEST_CASE("qutrit projectors match tensor products") {
    CHECK(qutrit_projector_diagonal(1, 1) == std::vector<double>{1, 0, 1});
    CHECK(qutrit_projector_diagonal(2, 2) == std::vector<double>{1, 0, 1, 1, 0, 1, 1, 0, 1});
    for (int l = 1; l <= 4; ++l)
        for (int i = 1; i <= l; ++i) {
            const auto p = qutrit_projector(i, l);
            CHECK(p.tag() == OperatorTag::Projector);
            CHECK(max_abs(p.matrix() - oracle::qutrit_projector(i, l)) == 0.0);
            CHECK(p.matrix().trace().real() == doctest::Approx(2 * oracle::pow3(l - 1)));
        }
    CHECK_THROWS_AS(qutrit_projector(0, 3), UsageError);
    CHECK_THROWS_AS(qutrit_projector(4, 3), UsageError);
    CHECK_THROWS_AS(QutritRegister::make(kMaxQutrits + 1), UsageError);
}

TEST_CASE("open maps equal the explicit operator products") {
    for (int l = 1; l <= 4; ++l) {
        const int d = oracle::pow3(l);
        const Eigen::MatrixXcd gd = oracle::fourier(d);
        const Eigen::MatrixXcd bmix = oracle::kron(Eigen::MatrixXcd::Identity(3, 3), oracle::fourier(d / 3));
        for (int k = 1; k <= l; ++k) {
            CAPTURE(l);
            CAPTURE(k);
            const Eigen::MatrixXcd pk = oracle::qutrit_projector(k, l);
            const Eigen::MatrixXcd shift = gd.adjoint() * pk * bmix * pk;
            Eigen::MatrixXcd pcap = Eigen::MatrixXcd::Identity(d, d);
            for (int i = 1; i <= k; ++i) pcap = pcap * oracle::qutrit_projector(i, l);
            const Eigen::MatrixXcd inter = gd.adjoint() * pcap * bmix * pcap;

            const auto s = open_map(OpeningSpec::make(Family::Shift, k, l));
            const auto i = open_map(OpeningSpec::make(Family::Intersection, k, l));
            CHECK(s.tag() == OperatorTag::OpenMap);
            CHECK(max_abs(s.matrix() - shift) < 1e-12);
            CHECK(max_abs(i.matrix() - inter) < 1e-12);
        }
    }
}

TEST_CASE("open-map properties") {
    for (int l = 1; l <= 5; ++l) {
        const auto s = open_map(OpeningSpec::make(Family::Shift, 1, l));
        const auto i = open_map(OpeningSpec::make(Family::Intersection, 1, l));
        CHECK(max_abs(s.matrix() - i.matrix()) == 0.0);
    }
    for (auto f : {Family::Shift, Family::Intersection})
        for (int k = 1; k <= 4; ++k) {
            const auto b = open_map(OpeningSpec::make(f, k, 4));
            const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(b.matrix());
            CHECK(svd.singularValues()(0) <= 1.0 + 1e-12);
        }
    // Projector diagonal of the intersection member k=l keeps 2^l basis states.
    const auto diag = opening_projector_diagonal(OpeningSpec::make(Family::Intersection, 5, 5));
    CHECK(std::count(diag.begin(), diag.end(), 1.0) == 32);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(open_map(OpeningSpec::make(Family::Intersection, 5, 5)).matrix());
    int rank = 0;
    for (Eigen::Index r = 0; r < svd.singularValues().size(); ++r) rank += svd.singularValues()(r) > 1e-10;
    CHECK(rank <= 32);
    CHECK(max_abs(diag_of(diag) - diag_of(diag) * diag_of(diag)) == 0.0);
}

TEST_CASE("operator file round trip and corruption") {
    const auto op = open_map(OpeningSpec::make(Family::Shift, 2, 3));
    std::stringstream buf;
    write_operator(buf, op);
    std::string bytes = buf.str();
    CHECK(bytes.size() == 56 + 27 * 27 * 16);

    std::istringstream in(bytes);
    const auto back = read_operator(in);
    CHECK(back.tag() == op.tag());
    CHECK(back.basis() == op.basis());
    CHECK(max_abs(back.matrix() - op.matrix()) == 0.0);

    std::string bad = bytes;
    bad[100] = static_cast<char>(bad[100] ^ 0x40);
    std::istringstream in_bad(bad);
    CHECK_THROWS_AS(read_operator(in_bad), FormatError);

    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_operator(truncated), FormatError);

    std::string magic = bytes;
    magic[0] = 'X';
    std::istringstream in_magic(magic);
    CHECK_THROWS_AS(read_operator(in_magic), FormatError);
}
