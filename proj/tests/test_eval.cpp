#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mpr/ablation.hpp"
#include "mpr/error.hpp"
#include "mpr/eval.hpp"
#include "mpr/training.hpp"

using namespace mpr;

namespace {

// Straight from the definitions, with a set lookup instead of binary search.
double brute_precision(const std::vector<std::size_t>& ranked, const std::set<std::size_t>& rel, std::size_t k) {
    double hits = 0;
    for (std::size_t i = 0; i < k && i < ranked.size(); ++i) hits += rel.count(ranked[i]) ? 1.0 : 0.0;
    return hits / double(k);
}

double brute_ndcg(const std::vector<std::size_t>& ranked, const std::set<std::size_t>& rel, std::size_t k) {
    if (rel.empty()) return 0.0;
    double dcg = 0, idcg = 0;
    for (std::size_t i = 1; i <= k && i <= ranked.size(); ++i)
        if (rel.count(ranked[i - 1])) dcg += 1.0 / std::log2(double(i) + 1.0);
    for (std::size_t i = 1; i <= std::min(k, rel.size()); ++i) idcg += 1.0 / std::log2(double(i) + 1.0);
    return dcg / idcg;
}

}  // namespace

TEST_CASE("metric spot values") {
    const std::vector<std::size_t> ranked{4, 9, 7, 1, 2};
    const std::vector<std::size_t> all{1, 2, 4, 7, 9};
    CHECK(precision_at_k(ranked, all, 5) == 1.0);
    const std::vector<std::size_t> two{2, 9};
    CHECK(precision_at_k(ranked, two, 5) == 0.4);
    const std::vector<std::size_t> none;
    CHECK(precision_at_k(ranked, none, 5) == 0.0);
    CHECK(ndcg_at_k(ranked, none, 5) == 0.0);
    const std::vector<std::size_t> first{4};
    CHECK(ndcg_at_k(ranked, first, 3) == 1.0);
    const std::vector<std::size_t> absent{100};
    CHECK(ndcg_at_k(ranked, absent, 5) == 0.0);
    CHECK_THROWS_AS(precision_at_k(ranked, two, 0), Error);
    CHECK_THROWS_AS(ndcg_at_k(ranked, two, 0), Error);
}

TEST_CASE("NDCG with hits at ranks 1 and 3") {
    const std::vector<std::size_t> ranked{10, 11, 12};
    const std::vector<std::size_t> rel{10, 12};
    const double expected = (1.0 + 1.0 / std::log2(4.0)) / (1.0 + 1.0 / std::log2(3.0));
    CHECK(ndcg_at_k(ranked, rel, 3) == expected);
    CHECK(std::abs(expected - 0.9197) < 5e-5);
}

TEST_CASE("metrics agree with the brute-force definitions") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<std::size_t> ranked(n);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::shuffle(ranked.begin(), ranked.end(), rng);
        ranked.resize(1 + rng() % n);
        std::set<std::size_t> rel;
        const std::size_t r = rng() % (n + 1);
        for (std::size_t i = 0; i < r; ++i) rel.insert(rng() % (n + 5));
        const std::vector<std::size_t> rel_sorted(rel.begin(), rel.end());
        const std::size_t k = 1 + rng() % 25;
        CHECK(std::abs(precision_at_k(ranked, rel_sorted, k) - brute_precision(ranked, rel, k)) <= 1e-12);
        const double nd = ndcg_at_k(ranked, rel_sorted, k);
        CHECK(std::abs(nd - brute_ndcg(ranked, rel, k)) <= 1e-12);
        CHECK(nd >= 0.0);
        CHECK(nd <= 1.0 + 1e-15);

        // NDCG is 1 exactly when the prefix holds only relevant items.
        const std::size_t m = std::min(k, rel.size());
        bool perfect = m > 0 && ranked.size() >= m;
        for (std::size_t i = 0; perfect && i < m; ++i) perfect = rel.count(ranked[i]) > 0;
        CHECK((std::abs(nd - 1.0) < 1e-12) == perfect);
    }
}

TEST_CASE("evaluate with an oracle model") {
    const TrainingData data = fixtures::tiny_data();
    const std::size_t l = 2;
    ModelDims dims = ModelDims::uniform(4, {2, 3, 5}, data.x.cols(), 5, 2, 3, 0.0);
    ModelParams p = ModelParams::zeros(dims);
    PositiveIndex relevant = make_positive_index(3, 4);
    for (std::size_t u = 0; u < 4; ++u) {
        for (std::size_t j = 0; j < 5; ++j) {
            const auto& train = data.train[l][u];
            if (!std::binary_search(train.begin(), train.end(), j) && (j + u) % 2 == 0) relevant[l][u].push_back(j);
        }
    }
    relevant[l][1].clear();
    for (std::size_t j = 0; j < 5; ++j) p.poi_explicit[l](j, j) = 1.0;
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t j : relevant[l][u]) p.user_explicit(u, j) = 1.0;

    const std::vector<std::size_t> ks{1, 2, 5};
    const MetricTable t = evaluate(p, data, relevant, ks);
    std::size_t users = 0;
    for (std::size_t u = 0; u < 4; ++u) users += relevant[l][u].empty() ? 0 : 1;
    CHECK(t.levels[l].users_evaluated == users);
    CHECK(t.levels[0].users_evaluated == 0);
    for (std::size_t k : ks) {
        double p_expected = 0;
        for (std::size_t u = 0; u < 4; ++u)
            if (!relevant[l][u].empty()) p_expected += double(std::min(relevant[l][u].size(), k)) / double(k);
        CHECK(t.levels[l].at_k.at(k).ndcg == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(t.levels[l].at_k.at(k).precision == doctest::Approx(p_expected / double(users)).epsilon(1e-15));
    }
    CHECK(t.mean_ndcg(5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("cold users count separately and ignore their implicit rows") {
    TrainingData data = fixtures::tiny_data();
    for (auto& level : data.train) level[3].clear();
    REQUIRE(data.is_cold(3));
    CHECK_FALSE(data.is_cold(0));
    TrainConfig cfg;
    cfg.explicit_rank = 3;
    cfg.implicit_rank = 4;
    ModelParams p = fixtures::random_params(make_dims(data, cfg), 2);
    PositiveIndex relevant = make_positive_index(3, 4);
    relevant[2][3] = {1};
    relevant[2][0] = {2};
    const std::vector<std::size_t> ks{3};
    const MetricTable a = evaluate(p, data, relevant, ks);
    CHECK(a.levels[2].users_evaluated == 2);
    CHECK(a.levels[2].cold_start_users == 1);

    for (auto& m : p.user_implicit)
        for (double& v : m.row(3)) v = 42.0;
    for (auto& m : p.user_inter)
        for (double& v : m.row(3)) v = -42.0;
    const MetricTable b = evaluate(p, data, relevant, ks);
    CHECK(b.levels[2].at_k.at(3).ndcg == a.levels[2].at_k.at(3).ndcg);
}

TEST_CASE("random baseline matches the exact expectation and a permutation oracle") {
    const TrainingData data = fixtures::tiny_data();
    PositiveIndex relevant = make_positive_index(3, 4);
    relevant[2][0] = {2, 4};
    relevant[2][1] = {3};
    relevant[2][3] = {0, 4};
    for (std::size_t k : {1u, 2u, 3u, 10u}) {
        // Exact: each relevant candidate sits at every position with equal probability.
        double exact = 0.0;
        std::size_t users = 0;
        std::mt19937_64 rng(k);
        double permuted = 0.0;
        for (std::size_t u = 0; u < 4; ++u) {
            const auto& rel = relevant[2][u];
            if (rel.empty()) continue;
            const auto& train = data.train[2][u];
            std::vector<std::size_t> candidates;
            for (std::size_t j = 0; j < 5; ++j)
                if (!std::binary_search(train.begin(), train.end(), j)) candidates.push_back(j);
            std::size_t r = 0;
            for (std::size_t j : rel) r += std::binary_search(train.begin(), train.end(), j) ? 0 : 1;
            double positions = 0, ideal = 0;
            for (std::size_t i = 0; i < std::min(k, candidates.size()); ++i) positions += 1.0 / std::log2(i + 2.0);
            for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) ideal += 1.0 / std::log2(i + 2.0);
            exact += double(r) / double(candidates.size()) * positions / ideal;
            ++users;

            const std::set<std::size_t> rs(rel.begin(), rel.end());
            double s = 0;
            for (int i = 0; i < 10000; ++i) {
                std::shuffle(candidates.begin(), candidates.end(), rng);
                s += brute_ndcg(candidates, rs, k);
            }
            permuted += s / 10000.0;
        }
        exact /= double(users);
        permuted /= double(users);
        const double mc = random_ndcg_baseline(data, relevant, 2, k, 20000, 5);
        CHECK(mc == doctest::Approx(exact).epsilon(0.02));
        CHECK(permuted == doctest::Approx(exact).epsilon(0.02));
    }
}

TEST_CASE("evaluate ignores user order") {
    const TrainingData data = fixtures::tiny_data();
    TrainConfig cfg;
    cfg.explicit_rank = 3;
    cfg.implicit_rank = 4;
    const ModelParams p = fixtures::random_params(make_dims(data, cfg), 3);
    PositiveIndex relevant = make_positive_index(3, 4);
    relevant[2][0] = {2};
    relevant[2][2] = {0};
    relevant[1][1] = {2};
    const std::vector<std::size_t> ks{1, 3};
    const MetricTable a = evaluate(p, data, relevant, ks);

    // Swap users 0 and 2 everywhere.
    TrainingData swapped = data;
    ModelParams q = p;
    PositiveIndex rel2 = relevant;
    auto swap_rows = [](Matrix& m) {
        for (std::size_t k = 0; k < m.cols(); ++k) std::swap(m(0, k), m(2, k));
    };
    swap_rows(swapped.x);
    swap_rows(q.user_explicit);
    for (auto& m : q.user_implicit) swap_rows(m);
    for (auto& m : q.user_inter) swap_rows(m);
    for (auto& level : swapped.train) std::swap(level[0], level[2]);
    for (auto& level : swapped.history.top) std::swap(level[0], level[2]);
    for (auto& level : rel2) std::swap(level[0], level[2]);
    const MetricTable b = evaluate(q, swapped, rel2, ks);
    for (std::size_t l = 0; l < 3; ++l)
        for (std::size_t k : ks) {
            CHECK(a.levels[l].at_k.at(k).ndcg == doctest::Approx(b.levels[l].at_k.at(k).ndcg).epsilon(1e-15));
            CHECK(a.levels[l].at_k.at(k).precision == b.levels[l].at_k.at(k).precision);
        }
}

TEST_CASE("metric CSV") {
    MetricTable t;
    t.levels.resize(2);
    t.levels[0].users_evaluated = 3;
    t.levels[0].at_k[10] = {0.25, 0.5};
    t.levels[1].at_k[10] = {0.0, 0.0};
    std::ostringstream os;
    write_metric_csv(os, {{"M3", t}});
    const std::string s = os.str();
    CHECK(s.rfind("level,model,metric,k,value,users\n", 0) == 0);
    CHECK(s.find("1,M3,P,10,0.25,3\n") != std::string::npos);
    CHECK(s.find("1,M3,NDCG,10,0.5,3\n") != std::string::npos);
    CHECK(s.find("2,M3,NDCG,10,0,0\n") != std::string::npos);
}

TEST_CASE("ablation variants") {
    TrainConfig base;
    base.gamma = 1.7;
    const TrainConfig m1 = variant_config(base, Variant::M1);
    const TrainConfig m2 = variant_config(base, Variant::M2);
    const TrainConfig m3 = variant_config(base, Variant::M3);
    CHECK_FALSE(m1.propagate);
    CHECK(m1.gamma == 0.0);
    CHECK(m2.propagate);
    CHECK(m2.gamma == 0.0);
    CHECK(m3.propagate);
    CHECK(m3.gamma == 1.7);

    const TrainingData data = fixtures::tiny_data();
    TrainConfig cfg;
    cfg.explicit_rank = 3;
    cfg.implicit_rank = 4;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.lambda_reg = 0.1;
    PositiveIndex relevant = make_positive_index(3, 4);
    relevant[2][0] = {2};
    relevant[2][3] = {4};
    relevant[1][0] = {1};
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<std::size_t> ks{1, 3};
    const AblationResult r = ablation(data, relevant, relevant, cfg, seeds, ks);
    CHECK(r.runs.size() == 9);

    // M3 with γ = 0 is M2.
    TrainConfig m3_zero = variant_config(cfg, Variant::M3);
    m3_zero.gamma = 0.0;
    m3_zero.seed = 2;
    TrainConfig m2_cfg = variant_config(cfg, Variant::M2);
    m2_cfg.seed = 2;
    CHECK(train(data, relevant, m3_zero).params == train(data, relevant, m2_cfg).params);

    // The leaf level scores the same blocks under M1 and M2.
    ModelDims d1 = make_dims(data, variant_config(cfg, Variant::M1));
    ModelDims d2 = make_dims(data, variant_config(cfg, Variant::M2));
    const ModelParams p2 = fixtures::random_params(d2, 9);
    ModelParams p1 = p2;
    p1.dims = d1;
    const Scorer s1(p1, data.links, data.graphs, data.history), s2(p2, data.links, data.graphs, data.history);
    for (std::size_t u = 0; u < 4; ++u) CHECK(s1.score_all(u, 2) == s2.score_all(u, 2));

    double sum = 0;
    for (const auto& run : r.runs)
        if (run.variant == Variant::M2) sum += run.metrics.levels[2].at_k.at(3).ndcg;
    CHECK(r.mean(Variant::M2, 2, 3) == doctest::Approx(sum / 3));
    CHECK(r.stddev(Variant::M2, 2, 3) >= 0.0);

    std::ostringstream os;
    write_ablation_summary(os, r, 3, ks);
    const std::string s = os.str();
    CHECK(s.rfind("level,model,metric,k,mean,stddev,seeds\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 3 * 2 * 3 * 2);
    CHECK_THROWS_AS(ablation(data, relevant, relevant, cfg, {}, ks), Error);
}
