#pragma once

#include <array>
#include <optional>

#include "selftomo/protocol.hpp"
#include "selftomo/quantum_core.hpp"

namespace selftomo {

/// The six scalars p_{b,r} = p_{b,R_r}(+,+) of the calibration protocol,
/// b in {x, y, z}, r in {0, 1}.
struct SettingProbabilities {
    std::array<double, 6> values{};

    double at(Basis b, int r) const { return values[setting_index(b, r)]; }
    double& at(Basis b, int r) { return values[setting_index(b, r)]; }

    /// All entries in [0, 1/2] within tol.
    void validate(double tol = 1e-9) const;
};

/// Shot records for the six standard settings, in kSixSettings order.
struct SettingCounts {
    std::array<ShotRecord, 6> records{};

    const ShotRecord& at(Basis b, int r) const { return records[setting_index(b, r)]; }
    ShotRecord& at(Basis b, int r) { return records[setting_index(b, r)]; }
};

struct ReconstructionOptions {
    /// Squared components in [-clamp_eps, 0) are clamped to zero; anything
    /// below -clamp_eps is an error. The counts path widens this
    /// automatically to cover shot noise.
    double clamp_eps = 1e-6;
    /// Slack for the [0, 1/2] range check on input probabilities.
    double range_tol = 1e-9;
    /// Run the least-squares polish after the closed-form solve (counts path).
    bool refine = false;
    /// A refinement step may move no component by more than this many
    /// standard errors.
    double refine_sigma_guard = 5.0;
};

struct ReconstructionReport {
    BlochVector estimate = BlochVector::Zero();
    /// Axis the solve pivoted on (0..2); -1 when the estimate is the zero
    /// vector. The pivot component of the estimate is nonnegative; S and -S
    /// describe the same measurement.
    int pivot_axis = -1;
    bool clamped = false;
    /// max |forward(estimate) - input| over the six settings.
    double residual = 0.0;
    /// First-order standard errors per component (counts path only).
    std::optional<Eigen::Vector3d> statistical_sigma;
    bool refined = false;
};

/// Forward map: the six probabilities p_{b,r} generated by detector vector S.
SettingProbabilities forward_probabilities(const BlochVector& s);

/// Shared moment solve: squares = (S1^2, S2^2, S3^2) and crosses indexed so
/// crosses[i] = S_j S_k with {i, j, k} = {0, 1, 2}. Pivots on the largest
/// square; throws InconsistentStatisticsError / DegenerateStatisticsError.
struct MomentSolve {
    BlochVector estimate = BlochVector::Zero();
    int pivot_axis = -1;
    bool clamped = false;
};
MomentSolve solve_from_moments(const Eigen::Vector3d& squares,
                               const Eigen::Vector3d& crosses, double clamp_eps);

/// Inverse map: recovers S up to the global sign from exact or near-exact
/// setting probabilities.
ReconstructionReport reconstruct_bloch(const SettingProbabilities& p,
                                       const ReconstructionOptions& opts = {});

/// Finite-statistics front end: symmetry-projected frequencies, closed-form
/// solve, first-order standard errors, and optional least-squares refinement.
ReconstructionReport reconstruct_from_counts(const SettingCounts& counts,
                                             const ReconstructionOptions& opts = {});

/// Robustness of the identical-detector reconstruction when detector 2
/// actually differs by a random perturbation of radius at most delta.
struct PerturbationSummary {
    double delta = 0.0;
    int trials = 0;
    double min_error = 0.0;
    double max_error = 0.0;
    double mean_error = 0.0;
    double median_error = 0.0;
    /// First-order bound C * delta with C = 5 / |pivot component|.
    double bound = 0.0;
    bool within_bound = true;
};

PerturbationSummary perturbation_robustness(const BlochVector& s, double delta,
                                            int trials, std::uint64_t seed);

} // namespace selftomo
