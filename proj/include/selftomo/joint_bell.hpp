#pragma once

#include <array>
#include <optional>
#include <vector>

#include "selftomo/protocol.hpp"
#include "selftomo/quantum_core.hpp"

namespace selftomo {

/// Fuzzy joint measurement of two dichotomic observables X, Y: unit direction
/// vectors plus nonnegative accuracy factors. Valid instances keep every
/// outcome vector inside the unit ball.
struct JointPOVM {
    BlochVector s_x = BlochVector::UnitX();
    BlochVector s_y = BlochVector::UnitY();
    BlochVector s_xy = BlochVector::UnitZ();
    double gamma_x = 0.0;
    double gamma_y = 0.0;
    double gamma_xy = 0.0;

    void validate(double tol = kValidationTol) const;
};

/// Outcome index helpers shared by the 4-element sets and the 16-entry
/// tables; +1 sorts before -1.
inline constexpr int outcome_index(int x, int y) {
    return (x < 0 ? 2 : 0) + (y < 0 ? 1 : 0);
}
inline constexpr std::array<std::pair<int, int>, 4> kOutcomePairs = {{
    {+1, +1}, {+1, -1}, {-1, +1}, {-1, -1},
}};

/// The four outcome vectors S~(x,y) of a fuzzy joint measurement; they sum
/// to zero (POVM completeness) and each has norm <= 1.
struct OutcomeVectorSet {
    std::array<BlochVector, 4> vectors{};

    const BlochVector& at(int x, int y) const { return vectors[outcome_index(x, y)]; }
    BlochVector& at(int x, int y) { return vectors[outcome_index(x, y)]; }

    BlochVector completeness_sum() const;
};

/// Sharpened counterpart: raw vectors of unrestricted norm. Norm > 1 means
/// the corresponding element has a negative eigenvalue.
struct QuasiPOVM {
    std::array<BlochVector, 4> vectors{};

    const BlochVector& at(int x, int y) const { return vectors[outcome_index(x, y)]; }
    BlochVector& at(int x, int y) { return vectors[outcome_index(x, y)]; }

    double max_norm() const;
    bool negative() const { return max_norm() > 1.0 + kValidationTol; }
};

/// 16 joint outcomes p(x1, y1, x2, y2) for one setting; nonnegative for the
/// fuzzy measurement, signed for the inferred sharp distribution.
struct JointOutcomeTable {
    std::array<double, 16> p{};

    static constexpr int index_of(int x1, int y1, int x2, int y2) {
        return 4 * outcome_index(x1, y1) + outcome_index(x2, y2);
    }
    double at(int x1, int y1, int x2, int y2) const { return p[index_of(x1, y1, x2, y2)]; }
    double& at(int x1, int y1, int x2, int y2) { return p[index_of(x1, y1, x2, y2)]; }

    double sum() const;
    double min() const;
};

using FuzzyJointTable = JointOutcomeTable;
using SignedJointTable = JointOutcomeTable;

/// Fuzzy tables for the six standard settings, in kSixSettings order.
struct JointSettingTables {
    std::array<FuzzyJointTable, 6> tables{};

    const FuzzyJointTable& at(Basis b, int r) const { return tables[setting_index(b, r)]; }
    FuzzyJointTable& at(Basis b, int r) { return tables[setting_index(b, r)]; }
};

/// S~(x,y) = x gamma_X S_X + y gamma_Y S_Y + x y gamma_XY S_XY.
OutcomeVectorSet outcome_vectors(const JointPOVM& j);

/// The four POVM elements (sigma0 + S~(x,y).sigma)/4.
std::array<QubitOperator, 4> joint_povm_elements(const JointPOVM& j);

/// Closed form p~(x1,y1,x2,y2) = (1 + S~(x1,y1) . R S~*_b(x2,y2)) / 16.
FuzzyJointTable fuzzy_joint_statistics(const JointPOVM& j, const ProtocolSetting& setting);

/// Independent 4x4 Born-rule evaluation of the same table.
FuzzyJointTable fuzzy_joint_statistics_oracle(const JointPOVM& j,
                                              const ProtocolSetting& setting);

struct JointReconstructionOptions {
    double clamp_eps = 1e-6;
    /// Completeness residual allowed after the sign search.
    double completeness_tol = 1e-6;
};

struct JointReconstruction {
    OutcomeVectorSet vectors;
    /// |sum of outcome vectors| after sign resolution.
    double completeness_residual = 0.0;
    /// True when the canonical orientation flipped all four vectors.
    bool flipped = false;
};

/// Per-outcome qubit reconstruction from the diagonal entries of the six
/// fuzzy tables, with the relative signs fixed by completeness and the
/// global flip canonicalized on S~(1,1).
JointReconstruction reconstruct_outcome_vectors(const JointSettingTables& tables,
                                                const JointReconstructionOptions& opts = {});

/// Accuracy factor and direction recovered from one pair sum; the direction
/// is unset when the factor vanishes.
struct RecoveredComponent {
    double gamma = 0.0;
    std::optional<BlochVector> direction;
};

struct JointDecomposition {
    RecoveredComponent x;
    RecoveredComponent y;
    RecoveredComponent xy;

    /// Rebuilds a JointPOVM, substituting fixed axes for unset directions.
    JointPOVM as_povm() const;
};

/// Splits the outcome vectors back into (S_X, gamma_X), (S_Y, gamma_Y),
/// (S_XY, gamma_XY) via the pairwise sums.
JointDecomposition decompose(const OutcomeVectorSet& v);

/// Sharpening map S(x,y) = x S_X + y S_Y + x y (gamma_XY / (gamma_X gamma_Y)) S_XY.
/// Throws InversionUndefinedError when gamma_X or gamma_Y vanishes.
QuasiPOVM invert(const JointPOVM& j);

/// Signed inferred distribution of the sharpened elements.
SignedJointTable inferred_distribution(const QuasiPOVM& q, const ProtocolSetting& setting);

struct NegativityCertificate {
    double min_entry = 0.0;
    SettingId min_entry_setting{Basis::z, 0};
    std::array<int, 4> min_entry_outcome{+1, +1, +1, +1};
    double min_eigenvalue = 0.0;
    double max_vector_norm = 0.0;
    bool nonclassical = false;
};

/// Scans the inferred distribution over the given settings and combines it
/// with the element-eigenvalue criterion (1 - max |S(x,y)|) / 4.
NegativityCertificate negativity_report(const QuasiPOVM& q,
                                        const std::vector<SettingId>& settings);

} // namespace selftomo
