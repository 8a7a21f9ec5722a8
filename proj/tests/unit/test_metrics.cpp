#include "doctest.h"

#include <algorithm>

#include "oracles/metrics_oracle.hpp"
#include "support/test_support.hpp"
#include "vlmbench/metrics.hpp"

using namespace vlmbench;
using namespace vlmbench::metrics;

namespace {

constexpr double kTol = 1e-9;

std::vector<Pair> pairs_of(const std::vector<double>& truth, const std::vector<double>& pred) {
    std::vector<Pair> out;
    for (std::size_t i = 0; i < truth.size(); ++i) out.push_back({truth[i], pred[i]});
    return out;
}

std::vector<oracle::Pt> to_oracle(const std::vector<Pair>& pairs) {
    std::vector<oracle::Pt> out;
    for (const auto& p : pairs) out.push_back({p.truth, p.pred});
    return out;
}

void check_same(const Sentinel& got, const std::optional<double>& want) {
    REQUIRE(got.has_value() == want.has_value());
    if (got) CHECK(*got == doctest::Approx(*want).epsilon(kTol));
}

std::vector<Pair> random_pairs(testing::Rng& rng, int lo, int hi, bool integral) {
    std::vector<Pair> out;
    const int n = rng.integer(1, 50);
    for (int i = 0; i < n; ++i) {
        if (integral) {
            out.push_back({static_cast<double>(rng.integer(lo, hi)), static_cast<double>(rng.integer(lo, hi))});
        } else {
            out.push_back({rng.real(lo, hi), rng.real(lo, hi)});
        }
    }
    return out;
}

}  // namespace

TEST_CASE("proximity") {
    CHECK(proximity(5, 6, 8) == 0.875);
    CHECK(proximity(4, 4, 8) == 1);
    CHECK(proximity(0, 100, 8) == 0);
    CHECK(proximity(6, 5, 8) == proximity(5, 6, 8));
    CHECK_THROWS_AS(proximity(1, 1, 0), MetricError);
    CHECK_THROWS_AS(proximity(1, 1, -2), MetricError);
}

TEST_CASE("property: proximity is bounded, symmetric and monotone") {
    testing::Rng rng(13);
    for (int i = 0; i < 5000; ++i) {
        const double y = rng.real(-50, 50), r = rng.real(0.1, 60);
        const double d1 = rng.real(0, 80), d2 = rng.real(0, 80);
        const double yhat = y + d1;
        const double p1 = proximity(y, yhat, r);
        CHECK(p1 >= 0);
        CHECK(p1 <= 1);
        CHECK(p1 == proximity(yhat, y, r));
        if (d1 <= d2) CHECK(p1 >= proximity(y, y + d2, r));
    }
}

TEST_CASE("task proximity is the termwise mean") {
    auto pairs = pairs_of({5, 0, 3, 8, 2, 1}, {6, 0, 1, 0, 2, 4});
    CHECK(task_proximity(pairs, 8) == doctest::Approx(oracle::mean_proximity(to_oracle(pairs), 8)).epsilon(kTol));
    CHECK(task_proximity(pairs_of({1, 2}, {1, 2}), 3) == 1);
    CHECK_THROWS_AS(task_proximity({}, 8), MetricError);

    // Binary tasks: R = 1 makes proximity equal to accuracy (102 of 120).
    std::vector<Pair> sidewalk;
    for (int i = 0; i < 120; ++i) sidewalk.push_back({1, i < 102 ? 1.0 : 0.0});
    CHECK(task_proximity(sidewalk, 1) == doctest::Approx(0.85));
    CHECK(task_proximity(sidewalk, 1) == binary_metrics(sidewalk).accuracy);
}

TEST_CASE("binary metrics") {
    std::vector<Pair> all_yes;
    for (int i = 0; i < 120; ++i) all_yes.push_back({i < 101 ? 1.0 : 0.0, 1});
    const auto degenerate = binary_metrics(all_yes);
    CHECK(*degenerate.sensitivity == 1.0);
    CHECK(*degenerate.specificity == 0.0);
    CHECK(degenerate.cohen_kappa == 0.0);

    const auto perfect = binary_metrics(pairs_of({1, 0, 1, 0}, {1, 0, 1, 0}));
    CHECK(perfect.accuracy == 1);
    CHECK(perfect.cohen_kappa == 1);

    // TP=40, FN=10, FP=5, TN=45: po = 0.85, pe = (45*50 + 55*50)/100^2 = 0.5
    std::vector<Pair> table;
    for (int i = 0; i < 40; ++i) table.push_back({1, 1});
    for (int i = 0; i < 10; ++i) table.push_back({1, 0});
    for (int i = 0; i < 5; ++i) table.push_back({0, 1});
    for (int i = 0; i < 45; ++i) table.push_back({0, 0});
    const auto m = binary_metrics(table);
    CHECK(m.accuracy == doctest::Approx(0.85));
    CHECK(*m.sensitivity == doctest::Approx(0.8));
    CHECK(*m.specificity == doctest::Approx(0.9));
    CHECK(m.cohen_kappa == doctest::Approx((0.85 - 0.5) / (1 - 0.5)));

    const auto single_class = binary_metrics(pairs_of({1, 1, 1}, {1, 0, 1}));
    CHECK_FALSE(single_class.specificity.has_value());
    CHECK(single_class.cohen_kappa == 0.0);

    CHECK_THROWS_AS(binary_metrics(pairs_of({2}, {1})), MetricError);
    CHECK_THROWS_AS(binary_metrics({}), MetricError);
}

TEST_CASE("count metrics") {
    const auto shifted = count_metrics(pairs_of({1, 2, 3}, {2, 3, 4}));
    CHECK(shifted.mae == 1);
    CHECK(shifted.bias == 1);
    CHECK(shifted.exact == 0);
    CHECK(shifted.within1 == 1);
    CHECK(*shifted.pearson_r == doctest::Approx(1.0));

    const auto identical = count_metrics(pairs_of({2, 2, 2}, {2, 2, 2}));
    CHECK(identical.mae == 0);
    CHECK(identical.exact == 1);
    CHECK_FALSE(identical.pearson_r.has_value());

    const auto under = count_metrics(pairs_of({3, 5}, {1, 5}));
    CHECK(under.bias == -1);
    CHECK(under.within1 == 0.5);
    CHECK(under.within2 == 1);
}

TEST_CASE("continuous metrics") {
    const auto one = continuous_metrics(pairs_of({15}, {16}));
    CHECK(one.mae == 1);
    CHECK(one.within10m == 1);
    CHECK(*one.mape == doctest::Approx(100.0 / 15.0));
    CHECK_FALSE(one.pearson_r.has_value());

    const auto zero_truth = continuous_metrics(pairs_of({0, 10}, {5, 12}));
    CHECK(*zero_truth.mape == doctest::Approx(20.0));
    CHECK_FALSE(continuous_metrics(pairs_of({0}, {3})).mape.has_value());
    CHECK(continuous_metrics(pairs_of({4, 60}, {4, 60})).mape == 0.0);
    CHECK(continuous_metrics(pairs_of({10, 20}, {21, 30})).within10m == 0.5);
}

TEST_CASE("ordinal metrics") {
    const auto perfect = ordinal_metrics(pairs_of({1, 3, 6, 2}, {1, 3, 6, 2}), 6);
    CHECK(perfect.exact == 1);
    CHECK(perfect.weighted_kappa_linear == 1);

    const auto off_by_one = ordinal_metrics(pairs_of({1, 2, 3, 4, 5, 6}, {2, 3, 4, 5, 6, 5}), 6);
    CHECK(off_by_one.mae_class == 1);
    CHECK(off_by_one.within1class == 1);
    CHECK(off_by_one.exact == 0);

    // With two classes the linear weights reduce to plain kappa.
    testing::Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        auto pairs = random_pairs(rng, 1, 2, true);
        std::vector<Pair> binary;
        for (const auto& p : pairs) binary.push_back({p.truth - 1, p.pred - 1});
        CHECK(ordinal_metrics(pairs, 2).weighted_kappa_linear ==
              doctest::Approx(binary_metrics(binary).cohen_kappa).epsilon(kTol));
    }

    // Single-class perfect agreement has chance agreement 1: the degenerate sentinel wins.
    CHECK(ordinal_metrics(pairs_of({3, 3}, {3, 3}), 6).weighted_kappa_linear == 0);
    CHECK(ordinal_metrics(pairs_of({3, 3}, {2, 4}), 6).weighted_kappa_linear == 0);  // degenerate marginals
    CHECK_THROWS_AS(ordinal_metrics(pairs_of({7}, {1}), 6), MetricError);
    CHECK_THROWS_AS(ordinal_metrics(pairs_of({1.5}, {1}), 6), MetricError);
    CHECK_THROWS_AS(ordinal_metrics(pairs_of({1}, {1}), 1), MetricError);
}

TEST_CASE("6x6 confusion matrix against the weight-matrix formula") {
    // rows: truth class, cols: predicted class
    const int counts[6][6] = {{4, 1, 0, 0, 0, 0}, {1, 5, 2, 0, 0, 0}, {0, 2, 6, 1, 0, 0},
                              {0, 0, 1, 3, 2, 0}, {0, 0, 0, 2, 4, 1}, {0, 0, 0, 0, 1, 3}};
    std::vector<Pair> pairs;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            for (int k = 0; k < counts[i][j]; ++k) pairs.push_back({i + 1.0, j + 1.0});
        }
    }
    CHECK(ordinal_metrics(pairs, 6).weighted_kappa_linear ==
          doctest::Approx(oracle::weighted_kappa(to_oracle(pairs), 6)).epsilon(kTol));
}

TEST_CASE("property: every metric matches the independent implementation") {
    for (std::uint64_t seed = 100; seed < 400; ++seed) {
        testing::Rng rng(seed);
        INFO("seed ", seed);

        const auto b = random_pairs(rng, 0, 1, true);
        const auto bm = binary_metrics(b);
        const auto bo = oracle::binary(to_oracle(b));
        CHECK(bm.accuracy == doctest::Approx(bo.accuracy).epsilon(kTol));
        check_same(bm.sensitivity, bo.sensitivity);
        check_same(bm.specificity, bo.specificity);
        CHECK(bm.cohen_kappa == doctest::Approx(bo.kappa).epsilon(kTol));

        const auto c = random_pairs(rng, 0, 8, true);
        const auto cm = count_metrics(c);
        const auto co = to_oracle(c);
        CHECK(cm.mae == doctest::Approx(oracle::mae(co)).epsilon(kTol));
        CHECK(cm.bias == doctest::Approx(oracle::bias(co)).epsilon(kTol));
        CHECK(cm.exact == doctest::Approx(oracle::rate_within(co, 0)).epsilon(kTol));
        CHECK(cm.within1 == doctest::Approx(oracle::rate_within(co, 1)).epsilon(kTol));
        CHECK(cm.within2 == doctest::Approx(oracle::rate_within(co, 2)).epsilon(kTol));
        check_same(cm.pearson_r, oracle::pearson(co));

        const auto l = random_pairs(rng, 0, 60, false);
        const auto lm = continuous_metrics(l);
        const auto lo = to_oracle(l);
        CHECK(lm.mae == doctest::Approx(oracle::mae(lo)).epsilon(kTol));
        CHECK(lm.bias == doctest::Approx(oracle::bias(lo)).epsilon(kTol));
        check_same(lm.mape, oracle::mape(lo));
        CHECK(lm.within10m == doctest::Approx(oracle::rate_within(lo, 10)).epsilon(kTol));
        check_same(lm.pearson_r, oracle::pearson(lo));

        const int k = rng.integer(2, 7);
        const auto o = random_pairs(rng, 1, k, true);
        const auto om = ordinal_metrics(o, k);
        const auto oo = to_oracle(o);
        CHECK(om.exact == doctest::Approx(oracle::rate_within(oo, 0)).epsilon(kTol));
        CHECK(om.within1class == doctest::Approx(oracle::rate_within(oo, 1)).epsilon(kTol));
        CHECK(om.mae_class == doctest::Approx(oracle::mae(oo)).epsilon(kTol));
        CHECK(om.weighted_kappa_linear == doctest::Approx(oracle::weighted_kappa(oo, k)).epsilon(kTol));

        const double r = rng.real(1, 60);
        CHECK(task_proximity(l, r) == doctest::Approx(oracle::mean_proximity(lo, r)).epsilon(kTol));
    }
}

TEST_CASE("property: kappa is 1 on perfect agreement and r is bounded") {
    testing::Rng rng(19);
    for (int i = 0; i < 300; ++i) {
        auto pairs = random_pairs(rng, 1, 6, true);
        for (auto& p : pairs) p.pred = p.truth;
        const auto k = ordinal_metrics(pairs, 6).weighted_kappa_linear;
        const bool one_class = std::all_of(pairs.begin(), pairs.end(), [&](const Pair& p) { return p.truth == pairs[0].truth; });
        CHECK(k == (one_class ? 0.0 : 1.0));

        auto noisy = random_pairs(rng, 0, 20, false);
        if (auto r = pearson_r(noisy)) {
            CHECK(*r >= -1);
            CHECK(*r <= 1);
        }
    }
}

TEST_CASE("reliability rates") {
    auto table = parse_results_csv(
        "image,v,v_consensus,v_agreement,v_runs,v_truncated,s,s_truncated\n"
        "a.jpg,3,3,0.67,3;NA;3,0,1,1\n"
        "b.jpg,NA,NA,0.00,NA;NA;NA,1,NA,0\n");
    const auto r = reliability_rates(table, {"v", "s"});
    CHECK(r.runs == 8);
    CHECK(r.na_runs == 5);
    CHECK(r.na_rate == doctest::Approx(5.0 / 8.0));
    CHECK(r.task_cells == 4);
    CHECK(r.truncated == 2);
    CHECK(r.truncation_rate == 0.5);

    const auto empty = reliability_rates(ResultsTable{}, {"v"});
    CHECK(empty.na_rate == 0);
    CHECK(empty.truncation_rate == 0);
}

TEST_CASE("ranking") {
    const auto ranking = rank_models({
        {"b", {{"t1", 0.5}, {"t2", 0.5}}},
        {"a", {{"t2", 0.5}, {"t1", 0.5}}},
        {"c", {{"t1", 0.9}, {"t2", 0.8}}},
    });
    REQUIRE(ranking.rows.size() == 3);
    CHECK(ranking.tasks == std::vector<std::string>{"t1", "t2"});
    CHECK(ranking.rows[0].name == "c");
    CHECK(ranking.rows[0].mean == doctest::Approx(0.85));
    CHECK(ranking.rows[1].name == "a");
    CHECK(ranking.rows[1].rank == 2);
    CHECK(ranking.rows[2].name == "b");
    CHECK_THROWS_AS(rank_models({{"a", {{"t1", 1}}}, {"b", {{"t2", 1}}}}), MetricError);
    CHECK_THROWS_AS(rank_models({{"a", {{"t1", 1}}}, {"b", {{"t1", 1}, {"t2", 1}}}}), MetricError);
}
