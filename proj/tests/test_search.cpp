#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "kpart/search.hpp"
#include "support/enumerator.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace kpart;

namespace {

CrimeSeries series_from_xy(const std::vector<double>& pop, const std::vector<double>& rate,
                           int first_year = 1960) {
    CrimeSeries s;
    s.name = "synthetic";
    for (std::size_t i = 0; i < pop.size(); ++i) {
        Observation o;
        o.year = first_year + static_cast<int>(i);
        o.population = pop[i];
        o.rate = rate[i];
        s.observations.push_back(o);
    }
    return s;
}

}  // namespace

TEST_CASE("empty knot set fits the pure cubic once", "[search]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto x = oracle::sorted_uniform(rng, 12, 0.0, 1.0, 1e-3);
    std::vector<double> y;
    for (int i = 0; i < 12; ++i) y.push_back(u(rng));

    const ModelSelectionResult r = best_subsets(x, y, KnotSet{});
    CHECK(r.winning_mask == 0);
    REQUIRE(r.bic_table.size() == 1);
    CHECK(r.bic_table[0].feasible);
    CHECK(r.winner.p == 4);
}

TEST_CASE("zero-noise data recovers its generating knot", "[search]") {
    std::mt19937_64 rng(90210);
    // 31 observations, 3 partitions: candidates at indices 9, 19, 29 and the
    // remainder keeps index 29's x below max(x).
    const auto inst = testgen::convex_spline_instance(rng, 31, 3);
    const KnotSet knots = select_knots(inst.x, inst.y, 3);
    REQUIRE(knots.locations() == inst.expected_candidates);
    REQUIRE(knots.size() == 3);

    const ModelSelectionResult r = best_subsets(inst.x, inst.y, knots);
    KnotMask true_bit = 0;
    for (std::size_t k = 0; k < knots.size(); ++k)
        if (knots.knots[k].location == inst.true_knot) true_bit = KnotMask{1} << k;
    REQUIRE(true_bit != 0);
    CHECK(r.winning_mask == true_bit);  // exactly the generating singleton
    CHECK(r.winner.rss <= 1e-16);
    CHECK(r.winner.r2 >= 1.0 - 1e-12);
}

TEST_CASE("best_subsets matches the brute-force enumerator", "[search]") {
    std::mt19937_64 rng(1618);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 28 + rep;
        const auto x = oracle::sorted_uniform(rng, n, 0.0, 1.0, 1e-4);
        std::vector<double> y;
        for (std::size_t i = 0; i < n; ++i) y.push_back(u(rng));
        const KnotSet knots = select_knots(x, y, 4);

        const ModelSelectionResult impl = best_subsets(x, y, knots);
        const oracle::EnumerationResult ref =
            oracle::enumerate_subsets(x, y, knots, 1000 + rep);

        CHECK(impl.winning_mask == ref.winner_mask);
        CHECK(impl.winner_bic == ref.winner_bic);
        REQUIRE(impl.bic_table.size() == ref.table.size());
        for (std::size_t i = 0; i < ref.table.size(); ++i) {
            CHECK(impl.bic_table[i].mask == ref.table[i].mask);
            CHECK(impl.bic_table[i].p == ref.table[i].p);
            CHECK(impl.bic_table[i].feasible == ref.table[i].feasible);
            if (ref.table[i].feasible) {
                CHECK(impl.bic_table[i].bic == ref.table[i].bic);
                CHECK(impl.bic_table[i].rss == ref.table[i].rss);
            }
        }
    }
}

TEST_CASE("oversized masks are recorded infeasible, never winners", "[search]") {
    std::mt19937_64 rng(200);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 9;  // full mask needs n >= 10
    const auto x = oracle::sorted_uniform(rng, n, 0.0, 1.0, 1e-3);
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(u(rng));
    const KnotSet knots = knot_set_from_locations({x[1], x[3], x[5], x[7]});
    REQUIRE(knots.size() == 4);

    const ModelSelectionResult r = best_subsets(x, y, knots);
    REQUIRE(r.bic_table.size() == 16);
    for (const MaskScore& s : r.bic_table) {
        const bool fits = n >= s.p + 2;
        CHECK(s.feasible == fits);
        if (!fits) CHECK(std::isinf(s.bic));
    }
    CHECK(std::popcount(r.winning_mask) <= 3);
}

TEST_CASE("no feasible mask raises fit_error", "[search]") {
    const std::vector<double> x{0.0, 0.25, 0.5, 0.75, 1.0};
    const std::vector<double> y{0.1, 0.2, 0.3, 0.4, 0.5};
    CHECK_THROWS_AS(best_subsets(x, y, KnotSet{}), fit_error);  // n = 5 < 6
}

TEST_CASE("winner dominates its own bic table", "[search]") {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 40;
        const auto x = oracle::sorted_uniform(rng, n, 0.0, 1.0, 1e-4);
        std::vector<double> y;
        for (std::size_t i = 0; i < n; ++i) y.push_back(u(rng));
        const KnotSet knots = select_knots(x, y, 5);
        const ModelSelectionResult r = best_subsets(x, y, knots);

        double min_bic = std::numeric_limits<double>::infinity();
        double empty_rss = 0.0;
        for (const MaskScore& s : r.bic_table) {
            if (s.feasible) min_bic = std::min(min_bic, s.bic);
            if (s.mask == 0) empty_rss = s.rss;
        }
        CHECK(r.winner_bic == min_bic);
        CHECK(r.winner.rss <= empty_rss * (1.0 + 1e-12));
        CHECK(r.winner.p == 4 + static_cast<std::size_t>(std::popcount(r.winning_mask)));
    }
}

TEST_CASE("tie-breaking order: bic, then parameters, then mask", "[search]") {
    using kpart::detail::mask_lex_less;
    using kpart::detail::score_preferred;
    CHECK(mask_lex_less(0b10, 0b01, 2));       // knot 0 absent sorts first
    CHECK_FALSE(mask_lex_less(0b01, 0b10, 2));
    CHECK_FALSE(mask_lex_less(0b11, 0b11, 2));

    MaskScore a{0b01, 5.0, 1.0, 5, true};
    MaskScore b{0b10, 5.0, 1.0, 5, true};
    CHECK_FALSE(score_preferred(a, b, 2));  // b is lexicographically smaller
    CHECK(score_preferred(b, a, 2));

    MaskScore small{0b00, 5.0, 1.0, 4, true};
    CHECK(score_preferred(small, a, 2));  // fewer parameters at equal bic

    MaskScore better{0b11, 4.0, 1.0, 6, true};
    CHECK(score_preferred(better, small, 2));  // bic dominates

    MaskScore infeasible{0b01, -100.0, 1.0, 5, false};
    CHECK(score_preferred(small, infeasible, 2));
    CHECK_FALSE(score_preferred(infeasible, small, 2));
}

TEST_CASE("fit_kpart on an exact cubic selects no knots", "[search]") {
    std::vector<double> pop, rate;
    for (int i = 0; i < 40; ++i) {
        const double u = 1e6 + 2.5e4 * i;
        pop.push_back(u);
        const double s = static_cast<double>(i) / 39.0;
        rate.push_back(0.002 + 0.01 * s - 0.007 * s * s + 0.004 * s * s * s);
    }
    const ModelSelectionResult r = fit_kpart(series_from_xy(pop, rate), 5);
    CHECK(r.winning_mask == 0);
    CHECK(r.winner.rss <= 1e-12);
    CHECK(r.winner.r2_adj >= 1.0 - 1e-9);
    CHECK(r.selected_years.empty());
    CHECK(r.bic_table.size() == std::size_t{1} << r.knots.size());
}

TEST_CASE("remainder observations shape the fit but host no knots", "[search]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 11;
    const auto x = oracle::sorted_uniform(rng, n, 0.0, 1.0, 1e-3);
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(u(rng));

    const KnotSet knots = select_knots(x, y, 2);
    for (const Knot& k : knots.knots) CHECK(k.source_index < 10);

    const ModelSelectionResult full = best_subsets(x, y, knots);
    const std::vector<double> x10(x.begin(), x.begin() + 10);
    const std::vector<double> y10(y.begin(), y.begin() + 10);
    const ModelSelectionResult trimmed = best_subsets(x10, y10, knots);

    // Same candidates, one fewer row: the coefficients must move.
    const DesignMatrix d_full = build_design_matrix(x, knots, full.winning_mask);
    const FitResult on_full = fit_ols(d_full, y);
    const DesignMatrix d_trim = build_design_matrix(x10, knots, full.winning_mask);
    const FitResult on_trim = fit_ols(d_trim, y10);
    bool any_change = false;
    for (std::size_t j = 0; j < on_full.coefficients.size(); ++j)
        if (on_full.coefficients[j] != on_trim.coefficients[j]) any_change = true;
    CHECK(any_change);
    CHECK(trimmed.winner.n == 10);
    CHECK(full.winner.n == 11);
}

TEST_CASE("winner parameter count stays within K + 4", "[search]") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 30 + 3 * rep;
        const std::size_t k = 2 + rep % 7;
        std::vector<double> pop = oracle::sorted_uniform(rng, n, 1e5, 1e6, 10.0);
        std::vector<double> rate;
        for (std::size_t i = 0; i < n; ++i) rate.push_back(0.01 + 0.005 * u(rng));
        const ModelSelectionResult r = fit_kpart(series_from_xy(pop, rate), k);
        CHECK(r.winner.p <= k + 4);
        CHECK(r.k_requested == k);
    }
}

TEST_CASE("fit_kpart reports knots in raw units with their years", "[search]") {
    std::mt19937_64 rng(606);
    const auto inst = testgen::convex_spline_instance(rng, 40, 4);
    std::vector<double> pop;
    for (const double v : inst.x) pop.push_back(2e6 + 8e6 * v);
    const CrimeSeries series = series_from_xy(pop, inst.y);

    const ModelSelectionResult r = fit_kpart(series, 4);
    const auto raw = r.winning_knots_raw();
    const auto winning = r.winning_knots();
    REQUIRE(raw.size() == winning.size());
    REQUIRE(r.selected_years.size() == winning.size());
    for (std::size_t i = 0; i < winning.size(); ++i) {
        const std::size_t src = winning[i].source_index;
        CHECK_THAT(raw[i], Catch::Matchers::WithinRel(pop[src], 1e-9));
        CHECK(r.selected_years[i] == series.observations[src].year);
    }
    // The generating knot must be part of the winning model.
    bool found = false;
    for (std::size_t i = 0; i < winning.size(); ++i)
        if (winning[i].source_index == inst.true_source_index) found = true;
    CHECK(found);
    CHECK(r.winner.rss <= 1e-10);
}

TEST_CASE("fit_kpart is deterministic", "[search]") {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> pop = oracle::sorted_uniform(rng, 33, 5e5, 9e6, 100.0);
    std::vector<double> rate;
    for (int i = 0; i < 33; ++i) rate.push_back(0.005 + 0.02 * u(rng));
    const CrimeSeries series = series_from_xy(pop, rate);

    const ModelSelectionResult a = fit_kpart(series, 6);
    const ModelSelectionResult b = fit_kpart(series, 6);
    CHECK(a.winning_mask == b.winning_mask);
    CHECK(a.winner_bic == b.winner_bic);
    CHECK(a.winner.coefficients == b.winner.coefficients);
    CHECK(a.selected_years == b.selected_years);
}

TEST_CASE("fit_kpart contract checks", "[search]") {
    std::vector<double> pop, rate;
    for (int i = 0; i < 30; ++i) {
        pop.push_back(1e6 + 1e4 * i);
        rate.push_back(0.01 + 1e-4 * i);
    }
    const CrimeSeries series = series_from_xy(pop, rate);
    CHECK_THROWS_AS(fit_kpart(series, 0), contract_error);
    CHECK_THROWS_AS(fit_kpart(series, 31), contract_error);
    CHECK_THROWS_AS(fit_kpart(series, 21), contract_error);       // above the cap
    CHECK_THROWS_AS(fit_kpart(series, 15, 10), contract_error);   // custom cap
    CHECK_THROWS_AS(fit_kpart(CrimeSeries{}, 1), contract_error);
}
