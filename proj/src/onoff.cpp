#include "selftomo/onoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace selftomo {

void OnOffParams::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ValidationError("eta must lie in [0, 1]");
    }
    if (!(p_dark >= 0.0 && p_dark < 1.0)) {
        throw ValidationError("p_dark must lie in [0, 1)");
    }
}

double squeezed_mean_photons(double xi) {
    if (!(xi >= 0.0 && xi < 1.0)) {
        throw ValidationError("xi must lie in [0, 1)");
    }
    return 2.0 * xi * xi / (1.0 - xi * xi);
}

SqueezedVacuumParams SqueezedVacuumParams::from_xi(double xi) {
    return {xi, squeezed_mean_photons(xi)};
}

SqueezedVacuumParams SqueezedVacuumParams::from_mean_photons(double nbar) {
    if (!(nbar >= 0.0)) {
        throw ValidationError("nbar must be nonnegative");
    }
    return {std::sqrt(nbar / (2.0 + nbar)), nbar};
}

void SqueezedVacuumParams::validate() const {
    if (!(xi >= 0.0 && xi < 1.0)) {
        throw ValidationError("xi must lie in [0, 1)");
    }
    if (std::abs(nbar - squeezed_mean_photons(xi)) > 1e-12 * (1.0 + nbar)) {
        throw ValidationError("nbar is inconsistent with xi");
    }
}

void ClickTable::validate(double tol) const {
    if (std::abs(sum() - 1.0) > tol) {
        throw ValidationError("click table does not sum to 1");
    }
    if (std::abs(p_cn - p_nc) > tol) {
        throw ValidationError("click table violates the p(+,-) = p(-,+) symmetry");
    }
}

FockTruncation FockTruncation::for_tolerance(double xi, double tol, int hard_cap) {
    if (!(tol > 0.0)) {
        throw ValidationError("truncation tolerance must be positive");
    }
    if (!(xi >= 0.0 && xi < 1.0)) {
        throw ValidationError("xi must lie in [0, 1)");
    }
    FockTruncation trunc;
    if (xi == 0.0 || tol >= 1.0) {
        trunc.n_max = 0;
        trunc.tail_bound = std::pow(xi, 2);
        return trunc;
    }
    const double ratio = std::log(tol) / std::log(xi * xi);
    if (ratio > static_cast<double>(hard_cap)) {
        throw TruncationInfeasibleError("requested tail bound exceeds the term cap");
    }
    trunc.n_max = static_cast<int>(std::ceil(ratio));
    trunc.tail_bound = std::pow(xi, 2.0 * (trunc.n_max + 1));
    return trunc;
}

ClickTable click_probabilities_closed(const OnOffParams& d, const SqueezedVacuumParams& s) {
    d.validate();
    s.validate();
    const double no_dark = 1.0 - d.p_dark;
    ClickTable t;
    t.p_nn = no_dark * no_dark / (1.0 + s.nbar * d.eta * (1.0 - d.eta / 2.0));
    t.p_cn = no_dark / (1.0 + s.nbar * d.eta / 2.0) - t.p_nn;
    t.p_nc = t.p_cn;
    t.p_cc = 1.0 - 2.0 * t.p_cn - t.p_nn;
    return t;
}

ClickTable click_probabilities_oracle(const OnOffParams& d, const SqueezedVacuumParams& s,
                                      double tol) {
    d.validate();
    s.validate();
    const FockTruncation trunc = FockTruncation::for_tolerance(s.xi, tol);

    const double xi2 = s.xi * s.xi;
    const double survive = 1.0 - d.eta;
    const double no_dark = 1.0 - d.p_dark;

    ClickTable t{0.0, 0.0, 0.0, 0.0};
    double weight = 1.0 - xi2;      // (1 - xi^2) xi^(2n)
    double quiet = no_dark;         // (1 - p_d)(1 - eta)^n, no-click given n
    for (int n = 0; n <= trunc.n_max; ++n) {
        t.p_nn += weight * quiet * quiet;
        t.p_cn += weight * (1.0 - quiet) * quiet;
        t.p_cc += weight * (1.0 - quiet) * (1.0 - quiet);
        weight *= xi2;
        quiet *= survive;
    }
    t.p_nc = t.p_cn;
    return t;
}

namespace {

// Stable real roots of c2 x^2 + c1 x + c0 = 0.
int quadratic_roots(double c2, double c1, double c0, double roots[2]) {
    if (std::abs(c2) < 1e-300) {
        if (std::abs(c1) < 1e-300) {
            if (std::abs(c0) < 1e-300) {
                roots[0] = 0.0;
                return 1;
            }
            return 0;
        }
        roots[0] = -c0 / c1;
        return 1;
    }
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) {
        // A hair below zero is a double root drowned in rounding.
        if (disc > -1e-12 * std::max(c1 * c1, std::abs(4.0 * c2 * c0))) {
            disc = 0.0;
        } else {
            return 0;
        }
    }
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (c1 + (c1 >= 0.0 ? sq : -sq));
    roots[0] = q / c2;
    if (std::abs(q) > 1e-300) {
        roots[1] = c0 / q;
        return 2;
    }
    roots[1] = 0.0;
    return 2;
}

double table_residual(const ClickTable& fitted, const ClickTable& target) {
    return std::max({std::abs(fitted.p_nn - target.p_nn),
                     std::abs(fitted.p_cn - target.p_cn),
                     std::abs(fitted.p_nc - target.p_nc),
                     std::abs(fitted.p_cc - target.p_cc)});
}

OnOffFit fit_from_moments(double a, double b, const ClickTable& table, double nbar) {
    if (nbar == 0.0) {
        throw EtaUnidentifiableError(
            "a vacuum source leaves the efficiency undetermined; only p_dark is recoverable");
    }
    if (nbar < 0.0) {
        throw ValidationError("nbar must be nonnegative");
    }

    // Eliminating p_dark from A = p(-,-) and B = p(-,-) + p(+,-) leaves a
    // quadratic in eta.
    const double c2 = b * b * nbar * nbar / 4.0 + a * nbar / 2.0;
    const double c1 = (b * b - a) * nbar;
    const double c0 = b * b - a;

    double roots[2] = {0.0, 0.0};
    const int n_roots = quadratic_roots(c2, c1, c0, roots);
    if (n_roots == 0) {
        throw InconsistentTableError("no real efficiency reproduces the click table");
    }

    constexpr double kRangeSlack = 1e-9;
    OnOffFit fit;
    int n_candidates = 0;
    double best_residual = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_roots; ++i) {
        double eta = roots[i];
        if (eta < -kRangeSlack || eta > 1.0 + kRangeSlack) {
            continue;
        }
        eta = std::clamp(eta, 0.0, 1.0);
        double p_dark = 1.0 - b * (1.0 + nbar * eta / 2.0);
        if (p_dark < -0.05 || p_dark >= 1.0) {
            continue;
        }
        p_dark = std::max(p_dark, 0.0);
        if (n_candidates < 2) {
            fit.eta_candidates[n_candidates++] = eta;
        }
        const OnOffParams candidate{eta, p_dark};
        const double residual = table_residual(
            click_probabilities_closed(candidate, SqueezedVacuumParams::from_mean_photons(nbar)),
            table);
        if (residual < best_residual) {
            best_residual = residual;
            fit.params = candidate;
        }
    }
    if (n_candidates == 0) {
        throw InconsistentTableError("no efficiency in [0, 1] reproduces the click table");
    }
    fit.residual = best_residual;
    return fit;
}

} // namespace

OnOffFit fit_onoff(const ClickTable& t, double nbar) {
    t.validate(1e-9);
    return fit_from_moments(t.p_nn, t.p_nn + 0.5 * (t.p_cn + t.p_nc), t, nbar);
}

OnOffFit fit_onoff_counts(const std::array<std::uint64_t, 4>& counts, double nbar) {
    const double n = static_cast<double>(counts[0] + counts[1] + counts[2] + counts[3]);
    if (n == 0.0) {
        throw ValidationError("cannot fit a zero-shot record");
    }
    ClickTable f;
    f.p_nn = static_cast<double>(counts[0]) / n;
    f.p_cn = static_cast<double>(counts[1]) / n;
    f.p_nc = static_cast<double>(counts[2]) / n;
    f.p_cc = static_cast<double>(counts[3]) / n;

    const double a = f.p_nn;
    const double b = f.p_nn + 0.5 * (f.p_cn + f.p_nc);
    OnOffFit fit = fit_from_moments(a, b, f, nbar);

    // First-order error propagation through the implicit quadratic.
    const double eta = fit.params.eta;
    const double pair = f.p_cn + f.p_nc;
    const double var_a = a * (1.0 - a) / n;
    const double var_b = var_a + 0.25 * pair * (1.0 - pair) / n - a * pair / n;
    const double cov_ab = var_a - 0.5 * a * pair / n;

    const double half_load = 1.0 + nbar * eta / 2.0;
    const double df_da = 1.0 + nbar * eta - nbar * eta * eta / 2.0;
    const double df_db = -2.0 * b * half_load * half_load;
    const double df_deta = a * nbar * (1.0 - eta) - b * b * nbar * half_load;
    if (std::abs(df_deta) > 1e-12) {
        const double ga = -df_da / df_deta;
        const double gb = -df_db / df_deta;
        const double var_eta =
            ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov_ab;
        const double ha = -(b * nbar / 2.0) * ga;
        const double hb = -half_load - (b * nbar / 2.0) * gb;
        const double var_pd =
            ha * ha * var_a + hb * hb * var_b + 2.0 * ha * hb * cov_ab;
        fit.sigma_eta = std::sqrt(std::max(var_eta, 0.0));
        fit.sigma_p_dark = std::sqrt(std::max(var_pd, 0.0));
    }
    return fit;
}

} // namespace selftomo
