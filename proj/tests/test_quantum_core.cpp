#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "selftomo/quantum_core.hpp"
#include "selftomo/rng.hpp"

using namespace selftomo;

namespace {

const Complex kI{0.0, 1.0};

double max_abs_diff(const QubitOperator& a, const QubitOperator& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("pauli matrices follow the standard convention") {
    CHECK(max_abs_diff(pauli_identity(), QubitOperator::Identity()) == 0.0);

    QubitOperator z;
    z << 1, 0, 0, -1;
    CHECK(max_abs_diff(pauli(Basis::z), z) == 0.0);

    QubitOperator y;
    y << 0, -kI, kI, 0;
    CHECK(max_abs_diff(pauli(Basis::y), y) == 0.0);

    QubitOperator x;
    x << 0, 1, 1, 0;
    CHECK(max_abs_diff(pauli(Basis::x), x) == 0.0);

    for (Basis b : kAllBases) {
        CHECK(is_hermitian(pauli(b)));
        CHECK(is_unitary(pauli(b)));
    }
}

TEST_CASE("density_from_bloch") {
    SUBCASE("maximally mixed") {
        const QubitOperator rho = density_from_bloch(BlochVector::Zero());
        CHECK(max_abs_diff(rho, 0.5 * QubitOperator::Identity()) == 0.0);
    }
    SUBCASE("pure z-up") {
        const QubitOperator rho = density_from_bloch({0.0, 0.0, 1.0});
        QubitOperator expected;
        expected << 1, 0, 0, 0;
        CHECK(max_abs_diff(rho, expected) < 1e-15);
    }
    SUBCASE("eigenvalues are (1 +- |s|)/2") {
        // Independent eigensolve of the constructed matrix.
        const BlochVector s{0.3, -0.4, 0.5};
        const QubitOperator rho = density_from_bloch(s);
        Eigen::SelfAdjointEigenSolver<QubitOperator> solver(rho);
        const double lo = (1.0 - std::sqrt(0.5)) / 2.0;
        const double hi = (1.0 + std::sqrt(0.5)) / 2.0;
        CHECK(solver.eigenvalues()(0) == doctest::Approx(lo).epsilon(1e-12));
        CHECK(solver.eigenvalues()(1) == doctest::Approx(hi).epsilon(1e-12));
        CHECK(std::abs(rho.trace().real() - 1.0) < 1e-15);
        CHECK(is_hermitian(rho));
    }
    SUBCASE("norm violation") {
        CHECK_THROWS_AS(density_from_bloch({1.0, 0.5, 0.0}), InvalidStateError);
    }
}

TEST_CASE("povm_from_bloch") {
    SUBCASE("projective limit") {
        const auto [plus, minus] = povm_from_bloch({0.0, 0.0, 1.0});
        QubitOperator p0, p1;
        p0 << 1, 0, 0, 0;
        p1 << 0, 0, 0, 1;
        CHECK(max_abs_diff(plus, p0) < 1e-15);
        CHECK(max_abs_diff(minus, p1) < 1e-15);
    }
    SUBCASE("uninformative measurement") {
        const auto [plus, minus] = povm_from_bloch(BlochVector::Zero());
        CHECK(max_abs_diff(plus, 0.5 * QubitOperator::Identity()) == 0.0);
        CHECK(max_abs_diff(minus, 0.5 * QubitOperator::Identity()) == 0.0);
    }
    SUBCASE("boundary of positivity") {
        const BlochVector s = BlochVector{2.0, -1.0, 2.0}.normalized();
        const auto [plus, minus] = povm_from_bloch(s);
        CHECK(min_eigenvalue(plus) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(min_eigenvalue(minus) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("completeness for random vectors") {
        auto eng = rng::make_engine(11);
        for (int i = 0; i < 50; ++i) {
            const BlochVector s = rng::uniform_in_ball(eng);
            const auto [plus, minus] = povm_from_bloch(s);
            CHECK(max_abs_diff(plus + minus, QubitOperator::Identity()) < 1e-14);
        }
    }
    SUBCASE("norm violation") {
        CHECK_THROWS_AS(povm_from_bloch({0.0, 1.1, 0.0}), InvalidPovmError);
    }
}

TEST_CASE("born_probability agrees with the Bloch form (1 + a s.S)/2") {
    SUBCASE("aligned projective") {
        const QubitOperator rho = density_from_bloch({0.0, 0.0, 1.0});
        const auto [plus, minus] = povm_from_bloch({0.0, 0.0, 1.0});
        CHECK(born_probability(rho, plus) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(born_probability(rho, minus) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("mixed state sees 1/2 everywhere") {
        auto eng = rng::make_engine(23);
        const QubitOperator rho = density_from_bloch(BlochVector::Zero());
        for (int i = 0; i < 20; ++i) {
            const auto [plus, minus] = povm_from_bloch(rng::uniform_in_ball(eng));
            CHECK(born_probability(rho, plus) == doctest::Approx(0.5).epsilon(1e-14));
        }
    }
    SUBCASE("worked value 0.75") {
        const QubitOperator rho = density_from_bloch({0.3, -0.4, 0.5});
        const auto [plus, minus] = povm_from_bloch({0.0, 0.0, 1.0});
        CHECK(born_probability(rho, plus) == doctest::Approx(0.75).epsilon(1e-14));
        CHECK(born_probability(rho, minus) == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("trace route equals Bloch route for random draws") {
        auto eng = rng::make_engine(37);
        for (int i = 0; i < 200; ++i) {
            const BlochVector s = rng::uniform_in_ball(eng);
            const BlochVector big_s = rng::uniform_in_ball(eng);
            const QubitOperator rho = density_from_bloch(s);
            const auto [plus, minus] = povm_from_bloch(big_s);
            const double dot = s.dot(big_s);
            CHECK(std::abs(born_probability(rho, plus) - 0.5 * (1.0 + dot)) < 1e-12);
            CHECK(std::abs(born_probability(rho, minus) - 0.5 * (1.0 - dot)) < 1e-12);
        }
    }
}

TEST_CASE("tensor is the Kronecker product with mode 1 on the left") {
    CHECK((tensor(pauli_identity(), pauli_identity()) -
           FourLevelOperator::Identity()).cwiseAbs().maxCoeff() == 0.0);

    const FourLevelOperator zz = tensor(pauli(Basis::z), pauli(Basis::z));
    FourLevelOperator expected = FourLevelOperator::Zero();
    expected(0, 0) = 1;
    expected(1, 1) = -1;
    expected(2, 2) = -1;
    expected(3, 3) = 1;
    CHECK((zz - expected).cwiseAbs().maxCoeff() == 0.0);

    // (sigma_x (x) sigma_z) |00> = |10>
    TwoQubitState ket00 = TwoQubitState::Zero();
    ket00(0) = 1.0;
    const TwoQubitState mapped = tensor(pauli(Basis::x), pauli(Basis::z)) * ket00;
    TwoQubitState ket10 = TwoQubitState::Zero();
    ket10(2) = 1.0;
    CHECK((mapped - ket10).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rotation_to_unitary") {
    SUBCASE("identity rotation") {
        const QubitOperator u = rotation_to_unitary(Rotation3::Identity());
        CHECK(max_abs_diff(u, pauli_identity()) < 1e-15);
    }
    SUBCASE("z rotation gives the standard phase pair") {
        const double theta = 0.7;
        const Rotation3 r = Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        const QubitOperator u = rotation_to_unitary(r);
        QubitOperator expected;
        expected << std::exp(-kI * theta / 2.0), 0, 0, std::exp(kI * theta / 2.0);
        // Strip the global phase before comparing.
        const Complex phase = u(0, 0) / std::abs(u(0, 0));
        CHECK(max_abs_diff(u / phase, expected / (expected(0, 0) / std::abs(expected(0, 0)))) < 1e-12);
    }
    SUBCASE("cyclic axis permutation conjugates sigma_j onto column j") {
        Rotation3 r1;
        r1 << 0, 1, 0,
              0, 0, 1,
              1, 0, 0;
        const QubitOperator u = rotation_to_unitary(r1);
        CHECK(is_unitary(u, 1e-12));
        const QubitOperator sigma[3] = {pauli(Basis::x), pauli(Basis::y), pauli(Basis::z)};
        for (int j = 0; j < 3; ++j) {
            QubitOperator expected = QubitOperator::Zero();
            for (int i = 0; i < 3; ++i) {
                expected += r1(i, j) * sigma[i];
            }
            CHECK(max_abs_diff(u * sigma[j] * u.adjoint(), expected) < 1e-12);
        }
    }
    SUBCASE("conjugation reconstructs (R s).sigma for random rotations") {
        auto eng = rng::make_engine(101);
        for (int i = 0; i < 100; ++i) {
            const Rotation3 r = rng::uniform_rotation(eng);
            const QubitOperator u = rotation_to_unitary(r);
            const BlochVector s = rng::uniform_in_ball(eng);
            const QubitOperator lhs = u * (2.0 * density_from_bloch(s) - pauli_identity()) * u.adjoint();
            const QubitOperator rhs = 2.0 * density_from_bloch(r * s) - pauli_identity();
            CHECK(max_abs_diff(lhs, rhs) < 1e-10);
        }
    }
    SUBCASE("half-turns hit the antipodal branch") {
        for (const Eigen::Vector3d& axis :
             {Eigen::Vector3d{1, 0, 0}, Eigen::Vector3d{0, 1, 0},
              Eigen::Vector3d{1, 1, 1}.normalized()}) {
            const Rotation3 r = Eigen::AngleAxisd(std::numbers::pi, axis).toRotationMatrix();
            const QubitOperator u = rotation_to_unitary(r);
            const BlochVector s{0.2, 0.3, -0.1};
            const QubitOperator lhs = u * (2.0 * density_from_bloch(s) - pauli_identity()) * u.adjoint();
            const QubitOperator rhs = 2.0 * density_from_bloch(r * s) - pauli_identity();
            CHECK(max_abs_diff(lhs, rhs) < 1e-10);
        }
    }
    SUBCASE("improper rotation is rejected") {
        Rotation3 mirror = Rotation3::Identity();
        mirror(2, 2) = -1.0;
        CHECK_THROWS_AS(rotation_to_unitary(mirror), ImproperRotationError);
    }
}

TEST_CASE("reflect") {
    const BlochVector s{0.3, -0.4, 0.5};
    CHECK(reflect(s, Basis::z) == BlochVector{0.3, 0.4, 0.5});
    CHECK(reflect(s, Basis::x) == BlochVector{0.3, -0.4, -0.5});
    CHECK(reflect(s, Basis::y) == BlochVector{-0.3, -0.4, 0.5});
    CHECK(reflect(BlochVector::Zero(), Basis::x) == BlochVector::Zero());

    SUBCASE("involution and isometry") {
        auto eng = rng::make_engine(5);
        for (int i = 0; i < 200; ++i) {
            const BlochVector v = 3.0 * rng::uniform_in_ball(eng);
            for (Basis b : kAllBases) {
                CHECK(reflect(reflect(v, b), b) == v);
                CHECK(reflect(v, b).norm() == v.norm());
            }
        }
    }
}

TEST_CASE("min_eigenvalue") {
    QubitOperator proj;
    proj << 1, 0, 0, 0;
    CHECK(min_eigenvalue(proj) == doctest::Approx(0.0).epsilon(1e-14));

    SUBCASE("quarter element with |V| = sqrt(5)") {
        const BlochVector v = std::sqrt(5.0) * BlochVector{1.0, 0.0, 0.0};
        QubitOperator dot;
        dot << Complex{v.z(), 0.0}, Complex{v.x(), -v.y()},
               Complex{v.x(), v.y()}, Complex{-v.z(), 0.0};
        const QubitOperator element = 0.25 * (QubitOperator::Identity() + dot);
        const double expected = (1.0 - std::sqrt(5.0)) / 4.0;
        CHECK(min_eigenvalue(element) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected == doctest::Approx(-0.3090169943749474).epsilon(1e-12));
    }

    CHECK(min_eigenvalue(FourLevelOperator::Identity()) == doctest::Approx(1.0).epsilon(1e-14));

    SUBCASE("non-Hermitian input is rejected") {
        QubitOperator bad;
        bad << 0, 1, 0, 0;
        CHECK_THROWS_AS(min_eigenvalue(bad), ValidationError);
    }
}
