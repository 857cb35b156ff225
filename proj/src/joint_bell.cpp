#include "selftomo/joint_bell.hpp"

#include <cmath>
#include <limits>

#include "selftomo/reconstruction.hpp"

namespace selftomo {

void JointPOVM::validate(double tol) const {
    if (std::abs(s_x.norm() - 1.0) > tol || std::abs(s_y.norm() - 1.0) > tol ||
        std::abs(s_xy.norm() - 1.0) > tol) {
        throw ValidationError("S_X, S_Y, S_XY must be unit vectors");
    }
    if (gamma_x < 0.0 || gamma_y < 0.0 || gamma_xy < 0.0) {
        throw ValidationError("accuracy factors must be nonnegative");
    }
    for (const auto& [x, y] : kOutcomePairs) {
        const BlochVector v = x * gamma_x * s_x + y * gamma_y * s_y + x * y * gamma_xy * s_xy;
        if (v.norm() > 1.0 + tol) {
            throw ValidationError("an outcome vector leaves the unit ball");
        }
    }
}

BlochVector OutcomeVectorSet::completeness_sum() const {
    return vectors[0] + vectors[1] + vectors[2] + vectors[3];
}

double QuasiPOVM::max_norm() const {
    double m = 0.0;
    for (const auto& v : vectors) {
        m = std::max(m, v.norm());
    }
    return m;
}

double JointOutcomeTable::sum() const {
    double s = 0.0;
    for (double v : p) {
        s += v;
    }
    return s;
}

double JointOutcomeTable::min() const {
    double m = p[0];
    for (double v : p) {
        m = std::min(m, v);
    }
    return m;
}

OutcomeVectorSet outcome_vectors(const JointPOVM& j) {
    j.validate();
    OutcomeVectorSet set;
    for (const auto& [x, y] : kOutcomePairs) {
        set.at(x, y) = x * j.gamma_x * j.s_x + y * j.gamma_y * j.s_y +
                       x * y * j.gamma_xy * j.s_xy;
    }
    return set;
}

namespace {

QubitOperator quarter_element(const BlochVector& v) {
    QubitOperator dot;
    dot << Complex{v.z(), 0.0}, Complex{v.x(), -v.y()},
           Complex{v.x(), v.y()}, Complex{-v.z(), 0.0};
    return 0.25 * (QubitOperator::Identity() + dot);
}

template <typename VectorsAt>
JointOutcomeTable bilinear_table(VectorsAt&& at, const ProtocolSetting& setting) {
    JointOutcomeTable t;
    std::array<BlochVector, 4> rotated;
    for (const auto& [x2, y2] : kOutcomePairs) {
        rotated[outcome_index(x2, y2)] =
            setting.rotation * reflect(at(x2, y2), setting.basis);
    }
    for (const auto& [x1, y1] : kOutcomePairs) {
        for (const auto& [x2, y2] : kOutcomePairs) {
            t.at(x1, y1, x2, y2) =
                (1.0 + at(x1, y1).dot(rotated[outcome_index(x2, y2)])) / 16.0;
        }
    }
    return t;
}

} // namespace

std::array<QubitOperator, 4> joint_povm_elements(const JointPOVM& j) {
    const OutcomeVectorSet set = outcome_vectors(j);
    std::array<QubitOperator, 4> elements;
    for (int i = 0; i < 4; ++i) {
        elements[i] = quarter_element(set.vectors[i]);
    }
    return elements;
}

FuzzyJointTable fuzzy_joint_statistics(const JointPOVM& j, const ProtocolSetting& setting) {
    const OutcomeVectorSet set = outcome_vectors(j);
    return bilinear_table([&](int x, int y) -> const BlochVector& { return set.at(x, y); },
                          setting);
}

FuzzyJointTable fuzzy_joint_statistics_oracle(const JointPOVM& j,
                                              const ProtocolSetting& setting) {
    const std::array<QubitOperator, 4> elements = joint_povm_elements(j);
    const QubitOperator u = rotation_to_unitary(setting.rotation);
    const TwoQubitState psi = entangled_state(setting.basis);

    FuzzyJointTable t;
    for (const auto& [x1, y1] : kOutcomePairs) {
        const QubitOperator mode1 =
            u.adjoint() * elements[outcome_index(x1, y1)] * u;
        for (const auto& [x2, y2] : kOutcomePairs) {
            const FourLevelOperator m = tensor(mode1, elements[outcome_index(x2, y2)]);
            t.at(x1, y1, x2, y2) = (psi.adjoint() * m * psi).value().real();
        }
    }
    return t;
}

JointReconstruction reconstruct_outcome_vectors(const JointSettingTables& tables,
                                                const JointReconstructionOptions& opts) {
    // Diagonal entries play the role of the qubit setting probabilities,
    // with the 16-outcome normalization in place of the 4-outcome one.
    std::array<BlochVector, 4> raw;
    for (const auto& [x, y] : kOutcomePairs) {
        const auto diag = [&](Basis b, int r) { return tables.at(b, r).at(x, y, x, y); };
        Eigen::Vector3d squares, crosses;
        squares[0] = 8.0 * (diag(Basis::x, 0) + diag(Basis::z, 0)) - 1.0;
        squares[1] = 8.0 * (diag(Basis::x, 0) + diag(Basis::y, 0)) - 1.0;
        squares[2] = 8.0 * (diag(Basis::y, 0) + diag(Basis::z, 0)) - 1.0;
        crosses[0] = 8.0 * (diag(Basis::y, 1) + diag(Basis::z, 1)) - 1.0;
        crosses[1] = 8.0 * (diag(Basis::x, 1) + diag(Basis::z, 1)) - 1.0;
        crosses[2] = 8.0 * (diag(Basis::x, 1) + diag(Basis::y, 1)) - 1.0;
        raw[outcome_index(x, y)] =
            solve_from_moments(squares, crosses, opts.clamp_eps).estimate;
    }

    // Each vector is known only up to sign; completeness (the four vectors
    // sum to zero) fixes the relative signs, leaving one global flip.
    double best_residual = std::numeric_limits<double>::infinity();
    int best_mask = 0;
    for (int mask = 0; mask < 16; ++mask) {
        BlochVector sum = BlochVector::Zero();
        for (int i = 0; i < 4; ++i) {
            sum += (mask >> i) & 1 ? -raw[i] : raw[i];
        }
        const double residual = sum.norm();
        if (residual < best_residual) {
            best_residual = residual;
            best_mask = mask;
        }
    }
    if (best_residual > opts.completeness_tol) {
        throw InconsistentTomographyError(
            "no sign assignment restores outcome-vector completeness");
    }

    JointReconstruction out;
    for (int i = 0; i < 4; ++i) {
        out.vectors.vectors[i] = (best_mask >> i) & 1 ? -raw[i] : raw[i];
    }
    out.completeness_residual = best_residual;

    const BlochVector& lead = out.vectors.at(+1, +1);
    for (int c = 0; c < 3; ++c) {
        if (std::abs(lead[c]) > 1e-9) {
            if (lead[c] < 0.0) {
                for (auto& v : out.vectors.vectors) {
                    v = -v;
                }
                out.flipped = true;
            }
            break;
        }
    }
    return out;
}

JointDecomposition decompose(const OutcomeVectorSet& v) {
    const auto component = [&](const BlochVector& pair_sum) {
        RecoveredComponent c;
        c.gamma = pair_sum.norm() / 2.0;
        if (c.gamma > 1e-12) {
            c.direction = pair_sum / (2.0 * c.gamma);
        }
        return c;
    };
    JointDecomposition d;
    d.x = component(v.at(+1, +1) + v.at(+1, -1));
    d.y = component(v.at(+1, +1) + v.at(-1, +1));
    d.xy = component(v.at(+1, +1) + v.at(-1, -1));
    return d;
}

JointPOVM JointDecomposition::as_povm() const {
    JointPOVM j;
    j.gamma_x = x.gamma;
    j.gamma_y = y.gamma;
    j.gamma_xy = xy.gamma;
    j.s_x = x.direction.value_or(BlochVector::UnitX());
    j.s_y = y.direction.value_or(BlochVector::UnitY());
    j.s_xy = xy.direction.value_or(BlochVector::UnitZ());
    return j;
}

QuasiPOVM invert(const JointPOVM& j) {
    j.validate();
    if (j.gamma_x == 0.0 || j.gamma_y == 0.0) {
        throw InversionUndefinedError(
            "gamma_X and gamma_Y must be positive to remove the fuzziness");
    }
    const double correlation = j.gamma_xy / (j.gamma_x * j.gamma_y);
    QuasiPOVM q;
    for (const auto& [x, y] : kOutcomePairs) {
        q.at(x, y) = x * j.s_x + y * j.s_y + x * y * correlation * j.s_xy;
    }
    return q;
}

SignedJointTable inferred_distribution(const QuasiPOVM& q, const ProtocolSetting& setting) {
    return bilinear_table([&](int x, int y) -> const BlochVector& { return q.at(x, y); },
                          setting);
}

NegativityCertificate negativity_report(const QuasiPOVM& q,
                                        const std::vector<SettingId>& settings) {
    NegativityCertificate cert;
    cert.max_vector_norm = q.max_norm();
    cert.min_eigenvalue = (1.0 - cert.max_vector_norm) / 4.0;
    cert.nonclassical = cert.min_eigenvalue < -1e-12;

    cert.min_entry = std::numeric_limits<double>::infinity();
    for (const SettingId& id : settings) {
        const SignedJointTable t = inferred_distribution(q, standard_setting(id.basis, id.r));
        for (const auto& [x1, y1] : kOutcomePairs) {
            for (const auto& [x2, y2] : kOutcomePairs) {
                const double value = t.at(x1, y1, x2, y2);
                if (value < cert.min_entry) {
                    cert.min_entry = value;
                    cert.min_entry_setting = id;
                    cert.min_entry_outcome = {x1, y1, x2, y2};
                }
            }
        }
    }
    return cert;
}

} // namespace selftomo
