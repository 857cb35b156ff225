#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "selftomo/quantum_core.hpp"

namespace selftomo {

/// One calibration setting: source basis b plus the plate rotation R on mode 1.
struct ProtocolSetting {
    Basis basis = Basis::z;
    Rotation3 rotation = Rotation3::Identity();
};

/// The two calibration rotations used by the six-setting protocol.
Rotation3 rotation_r0();
Rotation3 rotation_r1();

/// Setting (b, R_r) with r in {0, 1}.
ProtocolSetting standard_setting(Basis b, int r);

/// Label of one of the six standard calibration settings.
struct SettingId {
    Basis basis;
    int r;
};

/// Canonical enumeration order: basis-major, rotation-minor.
inline constexpr std::array<SettingId, 6> kSixSettings = {{
    {Basis::x, 0}, {Basis::x, 1},
    {Basis::y, 0}, {Basis::y, 1},
    {Basis::z, 0}, {Basis::z, 1},
}};

inline constexpr int setting_index(Basis b, int r) {
    return 2 * static_cast<int>(b) + r;
}

/// Joint two-outcome distribution for one setting. Outcome order is
/// (+,+), (+,-), (-,+), (-,-).
struct JointProbTable {
    std::array<double, 4> p{};

    static int index_of(int a1, int a2) { return (a1 < 0 ? 2 : 0) + (a2 < 0 ? 1 : 0); }

    double at(int a1, int a2) const { return p[index_of(a1, a2)]; }
    double& at(int a1, int a2) { return p[index_of(a1, a2)]; }

    double sum() const { return p[0] + p[1] + p[2] + p[3]; }

    /// Entries >= -tol and total probability 1 within tol.
    void validate(double tol = 1e-12) const;
};

/// Counts drawn from a JointProbTable, same outcome order.
struct ShotRecord {
    std::array<std::uint64_t, 4> counts{};
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    double frequency(int idx) const {
        return shots == 0 ? 0.0 : static_cast<double>(counts[idx]) / static_cast<double>(shots);
    }

    JointProbTable frequencies() const;
};

/// Source state for basis b, chosen so that detector 2's vector appears in
/// the joint statistics reflected in the b coordinate plane:
///   z -> (|00> + |11>)/sqrt(2)
///   y -> (|00> - |11>)/sqrt(2)
///   x -> (|01> + |10>)/sqrt(2)
TwoQubitState entangled_state(Basis b);

/// Closed-form joint statistics p(a1,a2) = (1 + a1 a2 S1 . R S2*_b) / 4.
/// Covers both identical (S1 = S2) and mismatched detector pairs.
JointProbTable joint_statistics_closed(const BlochVector& s1, const BlochVector& s2,
                                       const ProtocolSetting& setting);

/// Full Born-rule evaluation <psi_b| U^dag D1(a1) U (x) D2(a2) |psi_b> by
/// explicit 4x4 algebra; the independent check on the closed form.
JointProbTable joint_statistics_oracle(const BlochVector& s1, const BlochVector& s2,
                                       const ProtocolSetting& setting);

/// Collapses an identical-detector table to the scalar p_{b,R} = p(+,+),
/// using the symmetry-projected estimate (p(+,+) + p(-,-))/2. Throws
/// AsymmetricTableError when p(+,+) vs p(-,-) or p(+,-) vs p(-,+) differ by
/// more than tol.
double reduce_table(const JointProbTable& t, double tol = 1e-9);

/// Draws `shots` outcomes from an arbitrary category distribution by
/// sequential inverse-CDF lookups; bit-reproducible for a fixed seed.
/// Negative entries (within validation slop) are treated as zero.
std::vector<std::uint64_t> draw_categorical(std::span<const double> probs,
                                            std::uint64_t shots, std::uint64_t seed);

ShotRecord sample_counts(const JointProbTable& t, std::uint64_t shots, std::uint64_t seed);

} // namespace selftomo
