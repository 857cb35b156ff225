#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "selftomo/protocol.hpp"
#include "selftomo/rng.hpp"

using namespace selftomo;

namespace {

double max_table_diff(const JointProbTable& a, const JointProbTable& b) {
    double m = 0.0;
    for (int i = 0; i < 4; ++i) {
        m = std::max(m, std::abs(a.p[i] - b.p[i]));
    }
    return m;
}

} // namespace

TEST_CASE("entangled_state returns the pinned Bell states") {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    const TwoQubitState phi_plus = entangled_state(Basis::z);
    CHECK(phi_plus(0).real() == doctest::Approx(inv_sqrt2));
    CHECK(phi_plus(1) == Complex{0.0, 0.0});
    CHECK(phi_plus(2) == Complex{0.0, 0.0});
    CHECK(phi_plus(3).real() == doctest::Approx(inv_sqrt2));

    const TwoQubitState phi_minus = entangled_state(Basis::y);
    CHECK(phi_minus(0).real() == doctest::Approx(inv_sqrt2));
    CHECK(phi_minus(3).real() == doctest::Approx(-inv_sqrt2));

    const TwoQubitState psi_plus = entangled_state(Basis::x);
    CHECK(psi_plus(0) == Complex{0.0, 0.0});
    CHECK(psi_plus(1).real() == doctest::Approx(inv_sqrt2));
    CHECK(psi_plus(2).real() == doctest::Approx(inv_sqrt2));
    CHECK(psi_plus(3) == Complex{0.0, 0.0});

    for (Basis b : kAllBases) {
        CHECK(entangled_state(b).norm() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("closed-form joint statistics on pinned cases") {
    const BlochVector sz{0.0, 0.0, 1.0};

    SUBCASE("projective detectors, b = z, R0: perfectly correlated") {
        const JointProbTable t = joint_statistics_closed(sz, sz, standard_setting(Basis::z, 0));
        CHECK(t.at(+1, +1) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(t.at(+1, -1) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(t.at(-1, +1) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(t.at(-1, -1) == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("b = x flips the z component: anticorrelated") {
        const JointProbTable t = joint_statistics_closed(sz, sz, standard_setting(Basis::x, 0));
        CHECK(t.at(+1, +1) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(t.at(+1, -1) == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("uninformative detectors") {
        const JointProbTable t = joint_statistics_closed(BlochVector::Zero(), BlochVector::Zero(),
                                                         standard_setting(Basis::y, 1));
        for (double v : t.p) {
            CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
        }
    }
}

TEST_CASE("oracle equals the closed form") {
    SUBCASE("projective sanity value") {
        const BlochVector sz{0.0, 0.0, 1.0};
        const JointProbTable t = joint_statistics_oracle(sz, sz, standard_setting(Basis::z, 0));
        CHECK(t.at(+1, +1) == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("1000 random instances agree entrywise to 1e-12") {
        auto eng = rng::make_engine(2024);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const BlochVector s1 = rng::uniform_in_ball(eng);
            const BlochVector s2 = rng::uniform_in_ball(eng);
            const Basis b = kAllBases[static_cast<int>(3.0 * rng::uniform01(eng)) % 3];
            ProtocolSetting setting{b, Rotation3::Identity()};
            const int which = i % 3;
            if (which == 1) {
                setting.rotation = rotation_r1();
            } else if (which == 2) {
                setting.rotation = rng::uniform_rotation(eng);
            }
            worst = std::max(worst, max_table_diff(joint_statistics_closed(s1, s2, setting),
                                                   joint_statistics_oracle(s1, s2, setting)));
        }
        CHECK(worst < 1e-12);
    }
    SUBCASE("marginals are uniform") {
        auto eng = rng::make_engine(99);
        for (int i = 0; i < 100; ++i) {
            const BlochVector s1 = rng::uniform_in_ball(eng);
            const BlochVector s2 = rng::uniform_in_ball(eng);
            const ProtocolSetting setting{kAllBases[i % 3], rng::uniform_rotation(eng)};
            const JointProbTable t = joint_statistics_oracle(s1, s2, setting);
            CHECK(t.at(+1, +1) + t.at(+1, -1) == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(t.at(+1, +1) + t.at(-1, +1) == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(t.sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("b = z matches (1 + S.S*_z)/4 directly") {
        auto eng = rng::make_engine(7);
        for (int i = 0; i < 100; ++i) {
            const BlochVector s = rng::uniform_in_ball(eng);
            const JointProbTable t = joint_statistics_oracle(s, s, standard_setting(Basis::z, 0));
            const double expected = 0.25 * (1.0 + s.dot(reflect(s, Basis::z)));
            CHECK(t.at(+1, +1) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("reduce_table") {
    CHECK(reduce_table({{0.5, 0.0, 0.0, 0.5}}) == doctest::Approx(0.5));
    CHECK(reduce_table({{0.25, 0.25, 0.25, 0.25}}) == doctest::Approx(0.25));

    SUBCASE("noisy table uses the symmetry projection") {
        const JointProbTable noisy{{0.251, 0.249, 0.252, 0.248}};
        CHECK(reduce_table(noisy, 0.01) == doctest::Approx(0.2495).epsilon(1e-14));
    }
    SUBCASE("asymmetry beyond tolerance is an error") {
        const JointProbTable bad{{0.30, 0.25, 0.25, 0.20}};
        CHECK_THROWS_AS(reduce_table(bad, 1e-3), AsymmetricTableError);
    }
}

TEST_CASE("sample_counts") {
    const JointProbTable uniform{{0.25, 0.25, 0.25, 0.25}};

    SUBCASE("zero shots") {
        const ShotRecord rec = sample_counts(uniform, 0, 1);
        for (auto n : rec.counts) {
            CHECK(n == 0);
        }
    }
    SUBCASE("degenerate distribution") {
        const ShotRecord rec = sample_counts({{1.0, 0.0, 0.0, 0.0}}, 100, 42);
        CHECK(rec.counts[0] == 100);
        CHECK(rec.counts[1] + rec.counts[2] + rec.counts[3] == 0);
    }
    SUBCASE("reproducible for a fixed seed") {
        const ShotRecord a = sample_counts(uniform, 10000, 7);
        const ShotRecord b = sample_counts(uniform, 10000, 7);
        CHECK(a.counts == b.counts);
        const ShotRecord c = sample_counts(uniform, 10000, 8);
        CHECK(a.counts != c.counts);
    }
    SUBCASE("frozen stream guards the portable generator contract") {
        const ShotRecord rec = sample_counts(uniform, 1000, 42);
        CHECK(rec.counts[0] == 252);
        CHECK(rec.counts[1] == 262);
        CHECK(rec.counts[2] == 257);
        CHECK(rec.counts[3] == 229);
    }
    SUBCASE("counts concentrate within 5 sigma over 100 seeds") {
        const std::uint64_t shots = 1000000;
        const double sigma = std::sqrt(static_cast<double>(shots) * 0.25 * 0.75);
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const ShotRecord rec = sample_counts(uniform, shots, seed);
            std::uint64_t total = 0;
            for (auto n : rec.counts) {
                total += n;
                CHECK(std::abs(static_cast<double>(n) - 250000.0) <= 5.0 * sigma);
            }
            CHECK(total == shots);
        }
    }
}
