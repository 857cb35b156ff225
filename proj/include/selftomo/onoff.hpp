#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "selftomo/errors.hpp"

namespace selftomo {

/// Click/no-click detector: quantum efficiency eta and dark-count
/// probability p_dark.
struct OnOffParams {
    double eta = 1.0;
    double p_dark = 0.0;

    void validate() const;
};

/// Two-mode squeezed vacuum source. nbar = 2 xi^2 / (1 - xi^2) is kept
/// alongside xi so both parameterizations are available.
struct SqueezedVacuumParams {
    double xi = 0.0;
    double nbar = 0.0;

    static SqueezedVacuumParams from_xi(double xi);
    static SqueezedVacuumParams from_mean_photons(double nbar);

    void validate() const;
};

double squeezed_mean_photons(double xi);

/// Joint click statistics. Field order matches the reporting convention
/// p(-,-), p(+,-), p(-,+), p(+,+).
struct ClickTable {
    double p_nn = 0.0;
    double p_cn = 0.0;
    double p_nc = 0.0;
    double p_cc = 0.0;

    double sum() const { return p_nn + p_cn + p_nc + p_cc; }
    std::array<double, 4> as_array() const { return {p_nn, p_cn, p_nc, p_cc}; }

    /// Sum 1 and the p(+,-) = p(-,+) symmetry, both within tol.
    void validate(double tol = 1e-12) const;
};

/// Photon-number cutoff for the direct-summation check, with the exact
/// geometric tail it leaves behind.
struct FockTruncation {
    int n_max = 0;
    double tail_bound = 0.0;

    /// Smallest cutoff with tail <= tol. Throws TruncationInfeasibleError if
    /// that needs more than hard_cap terms.
    static FockTruncation for_tolerance(double xi, double tol, int hard_cap = 1000000);
};

/// Closed-form joint click statistics of the squeezed-vacuum calibration.
ClickTable click_probabilities_closed(const OnOffParams& d, const SqueezedVacuumParams& s);

/// Independent check: direct summation over the photon-number ladder,
/// truncated so the neglected tail is below tol.
ClickTable click_probabilities_oracle(const OnOffParams& d, const SqueezedVacuumParams& s,
                                      double tol = 1e-12);

struct OnOffFit {
    OnOffParams params;
    /// Both quadratic roots that fell inside [0, 1], when two did.
    std::array<std::optional<double>, 2> eta_candidates;
    /// max entry deviation of the refitted table.
    double residual = 0.0;
    std::optional<double> sigma_eta;
    std::optional<double> sigma_p_dark;
};

/// Recovers (eta, p_dark) from a click table at known mean photon number.
/// Exact for noiseless tables. Throws InconsistentTableError when no
/// efficiency in [0, 1] reproduces the table and EtaUnidentifiableError for
/// nbar = 0.
OnOffFit fit_onoff(const ClickTable& t, double nbar);

/// Finite-statistics fit: sampled counts (order p(-,-), p(+,-), p(-,+),
/// p(+,+)) with first-order standard errors attached.
OnOffFit fit_onoff_counts(const std::array<std::uint64_t, 4>& counts, double nbar);

} // namespace selftomo
