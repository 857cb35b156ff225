#include "selftomo/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "selftomo/rng.hpp"

namespace selftomo {

namespace {

// Squares use the r=0 block, crosses the r=1 block; each component pairs the
// two settings whose quadratic forms add up to isolate it.
constexpr SettingId kSquarePairs[3][2] = {
    {{Basis::x, 0}, {Basis::z, 0}},
    {{Basis::x, 0}, {Basis::y, 0}},
    {{Basis::y, 0}, {Basis::z, 0}},
};
constexpr SettingId kCrossPairs[3][2] = {
    {{Basis::y, 1}, {Basis::z, 1}},
    {{Basis::x, 1}, {Basis::z, 1}},
    {{Basis::x, 1}, {Basis::y, 1}},
};

double pair_moment(const SettingProbabilities& p, const SettingId (&pair)[2]) {
    return 2.0 * (p.at(pair[0].basis, pair[0].r) + p.at(pair[1].basis, pair[1].r)) - 1.0;
}

Eigen::Vector3d squares_of(const SettingProbabilities& p) {
    return {pair_moment(p, kSquarePairs[0]), pair_moment(p, kSquarePairs[1]),
            pair_moment(p, kSquarePairs[2])};
}

Eigen::Vector3d crosses_of(const SettingProbabilities& p) {
    return {pair_moment(p, kCrossPairs[0]), pair_moment(p, kCrossPairs[1]),
            pair_moment(p, kCrossPairs[2])};
}

double max_forward_deviation(const BlochVector& s, const SettingProbabilities& p) {
    const SettingProbabilities f = forward_probabilities(s);
    double dev = 0.0;
    for (int i = 0; i < 6; ++i) {
        dev = std::max(dev, std::abs(f.values[i] - p.values[i]));
    }
    return dev;
}

// Shot noise can push the raw solve slightly outside the unit ball; the
// returned estimate must stay physical.
BlochVector project_to_ball(BlochVector s) {
    const double n = s.norm();
    if (n > 1.0) {
        s /= n;
    }
    return s;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) {
        return 0.0;
    }
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Jacobian of the six forward probabilities with respect to S.
Eigen::Matrix<double, 6, 3> forward_jacobian(const BlochVector& s) {
    Eigen::Matrix<double, 6, 3> j;
    const double s1 = s[0], s2 = s[1], s3 = s[2];
    j.row(setting_index(Basis::x, 0)) << 2 * s1, 2 * s2, -2 * s3;
    j.row(setting_index(Basis::y, 0)) << -2 * s1, 2 * s2, 2 * s3;
    j.row(setting_index(Basis::z, 0)) << 2 * s1, -2 * s2, 2 * s3;
    j.row(setting_index(Basis::x, 1)) << s2 + s3, s1 - s3, s1 - s2;
    j.row(setting_index(Basis::y, 1)) << s2 - s3, s1 + s3, s2 - s1;
    j.row(setting_index(Basis::z, 1)) << s3 - s2, s3 - s1, s1 + s2;
    return j / 4.0;
}

Eigen::Matrix<double, 6, 1> forward_residual(const BlochVector& s,
                                             const SettingProbabilities& target) {
    const SettingProbabilities f = forward_probabilities(s);
    Eigen::Matrix<double, 6, 1> r;
    for (int i = 0; i < 6; ++i) {
        r[i] = f.values[i] - target.values[i];
    }
    return r;
}

// Levenberg-Marquardt polish of the closed-form estimate, constrained to the
// unit ball by projection.
BlochVector refine_least_squares(BlochVector s, const SettingProbabilities& target) {
    double lambda = 1e-6;
    Eigen::Matrix<double, 6, 1> r = forward_residual(s, target);
    double cost = r.squaredNorm();
    for (int iter = 0; iter < 60; ++iter) {
        const Eigen::Matrix<double, 6, 3> j = forward_jacobian(s);
        const Eigen::Matrix3d jtj = j.transpose() * j;
        const Eigen::Vector3d g = j.transpose() * r;
        const Eigen::Vector3d step =
            (jtj + lambda * Eigen::Matrix3d::Identity()).ldlt().solve(-g);
        BlochVector trial = s + step;
        if (trial.norm() > 1.0) {
            trial /= trial.norm();
        }
        const Eigen::Matrix<double, 6, 1> r_trial = forward_residual(trial, target);
        const double cost_trial = r_trial.squaredNorm();
        if (cost_trial < cost) {
            s = trial;
            r = r_trial;
            const double improvement = cost - cost_trial;
            cost = cost_trial;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (step.norm() < 1e-13 || improvement < 1e-24) {
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e8) {
                break;
            }
        }
    }
    return s;
}

} // namespace

void SettingProbabilities::validate(double tol) const {
    for (double v : values) {
        if (v < -tol || v > 0.5 + tol) {
            throw InconsistentStatisticsError(
                "setting probability outside [0, 1/2]");
        }
    }
}

SettingProbabilities forward_probabilities(const BlochVector& s) {
    if (s.norm() > 1.0 + kValidationTol) {
        throw InvalidPovmError("detector Bloch vector has norm > 1");
    }
    const double s1 = s[0], s2 = s[1], s3 = s[2];
    SettingProbabilities p;
    p.at(Basis::x, 0) = 0.25 * (1.0 + s1 * s1 + s2 * s2 - s3 * s3);
    p.at(Basis::y, 0) = 0.25 * (1.0 - s1 * s1 + s2 * s2 + s3 * s3);
    p.at(Basis::z, 0) = 0.25 * (1.0 + s1 * s1 - s2 * s2 + s3 * s3);
    p.at(Basis::x, 1) = 0.25 * (1.0 + s1 * s2 - s2 * s3 + s1 * s3);
    p.at(Basis::y, 1) = 0.25 * (1.0 + s1 * s2 + s2 * s3 - s1 * s3);
    p.at(Basis::z, 1) = 0.25 * (1.0 - s1 * s2 + s2 * s3 + s1 * s3);
    return p;
}

MomentSolve solve_from_moments(const Eigen::Vector3d& squares,
                               const Eigen::Vector3d& crosses, double clamp_eps) {
    MomentSolve out;
    Eigen::Vector3d sq = squares;
    for (int i = 0; i < 3; ++i) {
        if (sq[i] < -clamp_eps) {
            throw InconsistentStatisticsError(
                "squared component below -epsilon; statistics are inconsistent");
        }
        if (sq[i] < 0.0) {
            sq[i] = 0.0;
            out.clamped = true;
        }
    }

    int pivot = 0;
    sq.maxCoeff(&pivot);
    if (sq[pivot] <= clamp_eps) {
        const double cross_floor = std::max(10.0 * clamp_eps, 1e-9);
        if (crosses.cwiseAbs().maxCoeff() > cross_floor) {
            throw DegenerateStatisticsError(
                "all squared components vanish but cross terms do not");
        }
        out.estimate = BlochVector::Zero();
        out.pivot_axis = -1;
        out.clamped = true;
        return out;
    }

    const double pivot_value = std::sqrt(sq[pivot]);
    BlochVector s = BlochVector::Zero();
    s[pivot] = pivot_value;
    for (int j = 0; j < 3; ++j) {
        if (j == pivot) {
            continue;
        }
        s[j] = crosses[3 - j - pivot] / pivot_value;
    }
    out.estimate = s;
    out.pivot_axis = pivot;
    return out;
}

ReconstructionReport reconstruct_bloch(const SettingProbabilities& p,
                                       const ReconstructionOptions& opts) {
    p.validate(opts.range_tol);
    const MomentSolve solve = solve_from_moments(squares_of(p), crosses_of(p), opts.clamp_eps);
    ReconstructionReport report;
    report.estimate = project_to_ball(solve.estimate);
    report.pivot_axis = solve.pivot_axis;
    report.clamped = solve.clamped;
    report.residual = max_forward_deviation(report.estimate, p);
    return report;
}

ReconstructionReport reconstruct_from_counts(const SettingCounts& counts,
                                             const ReconstructionOptions& opts) {
    SettingProbabilities p;
    std::array<double, 6> var_p{};
    for (int i = 0; i < 6; ++i) {
        const ShotRecord& rec = counts.records[i];
        if (rec.shots == 0) {
            throw ValidationError("setting has a zero-shot record");
        }
        const double n = static_cast<double>(rec.shots);
        const JointProbTable f = rec.frequencies();

        // Symmetry check at the shot-noise scale: the projected difference of
        // a symmetric pair concentrates like sqrt(pair mass / N).
        const auto check_pair = [&](double a, double b) {
            const double scale = std::sqrt(std::max(a + b, 1.0 / n) / n);
            if (std::abs(a - b) > 8.0 * scale + 1e-12) {
                throw AsymmetricTableError(
                    "sampled table violates the identical-detector symmetry "
                    "far beyond shot noise");
            }
        };
        check_pair(f.at(+1, +1), f.at(-1, -1));
        check_pair(f.at(+1, -1), f.at(-1, +1));

        const double estimate = 0.5 * (f.at(+1, +1) + f.at(-1, -1));
        p.values[i] = estimate;
        // (n(+,+) + n(-,-)) is binomial with success probability 2 p_{b,r}.
        var_p[i] = std::max(estimate * (1.0 - 2.0 * estimate), 0.0) / (2.0 * n);
    }

    const auto pair_variance = [&](const SettingId(&pair)[2]) {
        return 4.0 * (var_p[setting_index(pair[0].basis, pair[0].r)] +
                      var_p[setting_index(pair[1].basis, pair[1].r)]);
    };
    Eigen::Vector3d var_sq, var_cross;
    for (int i = 0; i < 3; ++i) {
        var_sq[i] = pair_variance(kSquarePairs[i]);
        var_cross[i] = pair_variance(kCrossPairs[i]);
    }
    const double noise_eps = 8.0 * std::sqrt(var_sq.maxCoeff());
    const double clamp_eps = std::max(opts.clamp_eps, noise_eps);

    const MomentSolve solve = solve_from_moments(squares_of(p), crosses_of(p), clamp_eps);

    ReconstructionReport report;
    report.estimate = project_to_ball(solve.estimate);
    report.pivot_axis = solve.pivot_axis;
    report.clamped = solve.clamped;

    if (solve.pivot_axis >= 0) {
        const int k = solve.pivot_axis;
        const double pivot_value = solve.estimate[k];
        Eigen::Vector3d sigma;
        sigma[k] = std::sqrt(var_sq[k]) / (2.0 * pivot_value);
        for (int j = 0; j < 3; ++j) {
            if (j == k) {
                continue;
            }
            const double var_j = var_cross[3 - j - k] / (pivot_value * pivot_value) +
                                 std::pow(report.estimate[j] / pivot_value * sigma[k], 2);
            sigma[j] = std::sqrt(var_j);
        }
        report.statistical_sigma = sigma;

        if (opts.refine) {
            const BlochVector refined = refine_least_squares(report.estimate, p);
            bool guarded = true;
            for (int j = 0; j < 3; ++j) {
                if (std::abs(refined[j] - report.estimate[j]) >
                    opts.refine_sigma_guard * sigma[j]) {
                    guarded = false;
                    break;
                }
            }
            if (guarded) {
                report.estimate = refined;
                report.refined = true;
                if (report.estimate[k] < 0.0) {
                    report.estimate = -report.estimate;
                }
            }
        }
    }

    report.residual = max_forward_deviation(report.estimate, p);
    return report;
}

PerturbationSummary perturbation_robustness(const BlochVector& s, double delta,
                                            int trials, std::uint64_t seed) {
    if (delta < 0.0 || delta > 0.1) {
        throw ValidationError("delta must lie in [0, 0.1]");
    }
    if (s.norm() + delta > 1.0 + kValidationTol) {
        throw ValidationError("|S| + delta must not exceed 1");
    }
    if (trials < 1) {
        throw ValidationError("at least one trial is required");
    }

    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        auto eng = rng::make_engine(seed + static_cast<std::uint64_t>(trial));
        const BlochVector s2 = s + delta * rng::uniform_in_ball(eng);

        SettingProbabilities p;
        for (const SettingId& id : kSixSettings) {
            const JointProbTable t =
                joint_statistics_closed(s, s2, standard_setting(id.basis, id.r));
            p.at(id.basis, id.r) = reduce_table(t);
        }
        const ReconstructionReport rec = reconstruct_bloch(p);
        errors.push_back(std::min((rec.estimate - s).norm(), (rec.estimate + s).norm()));
    }

    PerturbationSummary summary;
    summary.delta = delta;
    summary.trials = trials;
    summary.min_error = *std::min_element(errors.begin(), errors.end());
    summary.max_error = *std::max_element(errors.begin(), errors.end());
    summary.mean_error = 0.0;
    for (double e : errors) {
        summary.mean_error += e;
    }
    summary.mean_error /= static_cast<double>(trials);
    summary.median_error = median(errors);

    const double pivot = s.cwiseAbs().maxCoeff();
    summary.bound = pivot > 0.0 ? (5.0 / pivot) * delta + 1e-11 : 1e-11;
    summary.within_bound = summary.max_error <= summary.bound;
    return summary;
}

} // namespace selftomo
