#pragma once

#include <algorithm>
#include <bit>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kpart/basis.hpp"
#include "kpart/errors.hpp"
#include "kpart/knots.hpp"
#include "kpart/ols.hpp"
#include "kpart/series.hpp"

namespace kpart {

struct MaskScore {
    KnotMask mask = 0;
    double bic = std::numeric_limits<double>::infinity();
    double rss = std::numeric_limits<double>::quiet_NaN();
    std::size_t p = 0;
    bool feasible = false;
};

struct ModelSelectionResult {
    KnotMask winning_mask = 0;
    FitResult winner;
    double winner_bic = 0.0;
    KnotSet knots;          // candidate knots, scaled predictor units
    ScaleTransform scale;   // identity unless fit through fit_kpart
    std::vector<MaskScore> bic_table;  // all 2^|knots| masks, in mask order
    std::size_t k_requested = 0;       // 0 when called below the pipeline
    std::vector<int> selected_years;   // winning knots' source years (pipeline only)

    std::vector<Knot> winning_knots() const {
        std::vector<Knot> out;
        for (std::size_t k = 0; k < knots.size(); ++k)
            if (winning_mask & (KnotMask{1} << k)) out.push_back(knots.knots[k]);
        return out;
    }
    std::vector<double> winning_knot_locations() const {
        std::vector<double> out;
        for (const auto& k : winning_knots()) out.push_back(k.location);
        return out;
    }
    std::vector<double> winning_knots_raw() const {
        std::vector<double> out;
        for (const auto& k : winning_knots()) out.push_back(scale.inverse(k.location));
        return out;
    }
};

namespace detail {

// Mask order used for BIC ties: bit-by-bit from knot 0, absent before present.
inline bool mask_lex_less(KnotMask a, KnotMask b, std::size_t n_knots) {
    for (std::size_t k = 0; k < n_knots; ++k) {
        const unsigned ba = (a >> k) & 1u, bb = (b >> k) & 1u;
        if (ba != bb) return ba < bb;
    }
    return false;
}

inline bool score_preferred(const MaskScore& a, const MaskScore& b, std::size_t n_knots) {
    if (a.feasible != b.feasible) return a.feasible;
    if (a.bic != b.bic) return a.bic < b.bic;
    if (a.p != b.p) return a.p < b.p;
    return mask_lex_less(a.mask, b.mask, n_knots);
}

}  // namespace detail

/// Exhaustive best-subsets over the knot columns; the four polynomial base
/// columns are always in. Masks that leave too few residual degrees of
/// freedom (n <= p + 1) or a singular design are kept in the table as
/// infeasible and can never win. Ties on BIC go to fewer parameters, then to
/// the lexicographically smallest mask.
inline ModelSelectionResult best_subsets(std::span<const double> x,
                                         std::span<const double> y, const KnotSet& knots) {
    if (x.size() != y.size()) throw contract_error("best_subsets: x and y lengths differ");
    const std::size_t m = knots.size();
    if (m > 20) throw contract_error("best_subsets: more than 20 candidate knots");
    const std::size_t n = y.size();

    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(n);
    double tss = 0.0;
    for (const double v : y) tss += (v - mean) * (v - mean);

    ModelSelectionResult result;
    result.knots = knots;
    const std::size_t n_masks = std::size_t{1} << m;
    result.bic_table.reserve(n_masks);

    bool have_winner = false;
    MaskScore best_score;
    FitResult best_fit;

    for (std::size_t raw = 0; raw < n_masks; ++raw) {
        const KnotMask mask = static_cast<KnotMask>(raw);
        MaskScore score;
        score.mask = mask;
        score.p = 4 + static_cast<std::size_t>(std::popcount(mask));
        if (n >= score.p + 2) {
            try {
                FitResult fit = fit_ols(build_design_matrix(x, knots, mask), y);
                score.rss = fit.rss;
                // Floor the RSS entering BIC at 1e-20 * TSS: fits that are
                // exact up to rounding then tie on BIC and the parameter
                // penalty decides, instead of floating-point noise.
                score.bic = bic(std::max({fit.rss, 1e-20 * tss, DBL_MIN}), n, score.p);
                score.feasible = true;
                if (!have_winner || detail::score_preferred(score, best_score, m)) {
                    have_winner = true;
                    best_score = score;
                    best_fit = std::move(fit);
                }
            } catch (const fit_error&) {
                score.feasible = false;
            }
        }
        result.bic_table.push_back(score);
    }

    if (!have_winner)
        throw fit_error("no feasible model: every knot subset fails the n > p + 1 or rank check");
    result.winning_mask = best_score.mask;
    result.winner = std::move(best_fit);
    result.winner_bic = best_score.bic;
    return result;
}

/// The end-to-end pipeline: condition the predictor onto [0, 1], run the
/// min/max selector, search subsets, and report knots back in raw units.
/// Every observation, remainder included, enters every fit.
inline ModelSelectionResult fit_kpart(const CrimeSeries& series, std::size_t k_parts,
                                      std::size_t max_k = 20) {
    const std::size_t n = series.size();
    if (n == 0) throw contract_error("fit_kpart: empty series");
    if (k_parts < 1 || k_parts > n)
        throw contract_error("fit_kpart: need 1 <= K <= n, got K=" + std::to_string(k_parts) +
                             ", n=" + std::to_string(n));
    if (k_parts > max_k)
        throw contract_error("fit_kpart: K=" + std::to_string(k_parts) +
                             " exceeds the cap of " + std::to_string(max_k));

    const std::vector<double> raw_x = series.populations();
    const std::vector<double> y = series.rates();
    const ScaleTransform scale = make_scale(raw_x);
    const std::vector<double> x = scale.forward(raw_x);

    const KnotSet knots = select_knots(x, y, k_parts);
    ModelSelectionResult result = best_subsets(x, y, knots);
    result.scale = scale;
    result.k_requested = k_parts;
    for (const Knot& k : result.winning_knots())
        result.selected_years.push_back(series.observations[k.source_index].year);
    return result;
}

}  // namespace kpart
