#include "selftomo/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "selftomo/rng.hpp"

namespace selftomo {

Rotation3 rotation_r0() {
    return Rotation3::Identity();
}

Rotation3 rotation_r1() {
    Rotation3 r;
    r << 0, 1, 0,
         0, 0, 1,
         1, 0, 0;
    return r;
}

ProtocolSetting standard_setting(Basis b, int r) {
    if (r != 0 && r != 1) {
        throw ValidationError("standard setting index must be 0 or 1");
    }
    return {b, r == 0 ? rotation_r0() : rotation_r1()};
}

void JointProbTable::validate(double tol) const {
    for (double v : p) {
        if (v < -tol) {
            throw ValidationError("joint table entry is negative");
        }
    }
    if (std::abs(sum() - 1.0) > tol) {
        throw ValidationError("joint table does not sum to 1");
    }
}

JointProbTable ShotRecord::frequencies() const {
    JointProbTable t;
    for (int i = 0; i < 4; ++i) {
        t.p[i] = frequency(i);
    }
    return t;
}

TwoQubitState entangled_state(Basis b) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    TwoQubitState psi = TwoQubitState::Zero();
    switch (b) {
        case Basis::z:
            psi(0) = inv_sqrt2;
            psi(3) = inv_sqrt2;
            break;
        case Basis::y:
            psi(0) = inv_sqrt2;
            psi(3) = -inv_sqrt2;
            break;
        case Basis::x:
            psi(1) = inv_sqrt2;
            psi(2) = inv_sqrt2;
            break;
    }
    return psi;
}

JointProbTable joint_statistics_closed(const BlochVector& s1, const BlochVector& s2,
                                       const ProtocolSetting& setting) {
    if (s1.norm() > 1.0 + kValidationTol || s2.norm() > 1.0 + kValidationTol) {
        throw InvalidPovmError("detector Bloch vector has norm > 1");
    }
    const double corr = s1.dot(setting.rotation * reflect(s2, setting.basis));
    JointProbTable t;
    for (int a1 : {+1, -1}) {
        for (int a2 : {+1, -1}) {
            t.at(a1, a2) = 0.25 * (1.0 + a1 * a2 * corr);
        }
    }
    return t;
}

JointProbTable joint_statistics_oracle(const BlochVector& s1, const BlochVector& s2,
                                       const ProtocolSetting& setting) {
    const auto [d1_plus, d1_minus] = povm_from_bloch(s1);
    const auto [d2_plus, d2_minus] = povm_from_bloch(s2);
    const QubitOperator u = rotation_to_unitary(setting.rotation);
    const TwoQubitState psi = entangled_state(setting.basis);

    const auto element = [&](const QubitOperator& d1, const QubitOperator& d2) {
        const FourLevelOperator m = tensor(u.adjoint() * d1 * u, d2);
        return (psi.adjoint() * m * psi).value().real();
    };

    JointProbTable t;
    t.at(+1, +1) = element(d1_plus, d2_plus);
    t.at(+1, -1) = element(d1_plus, d2_minus);
    t.at(-1, +1) = element(d1_minus, d2_plus);
    t.at(-1, -1) = element(d1_minus, d2_minus);
    return t;
}

double reduce_table(const JointProbTable& t, double tol) {
    if (std::abs(t.at(+1, +1) - t.at(-1, -1)) > tol ||
        std::abs(t.at(+1, -1) - t.at(-1, +1)) > tol) {
        throw AsymmetricTableError(
            "table violates the identical-detector symmetry; "
            "detectors differ or the data is corrupted");
    }
    return 0.5 * (t.at(+1, +1) + t.at(-1, -1));
}

std::vector<std::uint64_t> draw_categorical(std::span<const double> probs,
                                            std::uint64_t shots, std::uint64_t seed) {
    const std::size_t k = probs.size();
    std::vector<double> cdf(k, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        total += std::max(probs[i], 0.0);
        cdf[i] = total;
    }
    std::vector<std::uint64_t> counts(k, 0);
    if (shots == 0) {
        return counts;
    }
    if (total <= 0.0) {
        throw ValidationError("cannot sample from an all-zero distribution");
    }

    auto eng = rng::make_engine(seed);
    for (std::uint64_t n = 0; n < shots; ++n) {
        const double u = rng::uniform01(eng) * total;
        std::size_t idx = k - 1;
        for (std::size_t i = 0; i < k; ++i) {
            if (u < cdf[i]) {
                idx = i;
                break;
            }
        }
        ++counts[idx];
    }
    return counts;
}

ShotRecord sample_counts(const JointProbTable& t, std::uint64_t shots, std::uint64_t seed) {
    t.validate(1e-9);
    const auto counts = draw_categorical(std::span<const double>(t.p.data(), 4), shots, seed);
    ShotRecord rec;
    std::copy(counts.begin(), counts.end(), rec.counts.begin());
    rec.shots = shots;
    rec.seed = seed;
    return rec;
}

} // namespace selftomo
