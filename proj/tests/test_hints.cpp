#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "mpr/error.hpp"
#include "mpr/hints.hpp"

using namespace mpr;

namespace {

ModelDims tiny_dims(double gamma = 1.0) { return ModelDims::uniform(4, {2, 3, 5}, 6, 3, 4, 3, gamma); }

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("user aspect picks the best POI feature among the user's top K") {
    // B = {2, 3, 4}; pf peaks at column 2 within B.
    const std::vector<double> uf{0.1, 0.0, 0.9, 0.8, 0.7, 0.2};
    const std::vector<double> pf{0.9, 0.9, 0.5, 0.1, 0.3, 0.95};
    const UserAspect a = user_aspect(uf, pf, 3);
    CHECK(a.features == std::vector<std::size_t>{2, 3, 4});
    CHECK(a.user_values == std::vector<double>{0.9, 0.8, 0.7});
    CHECK(a.hint_feature == 2);
    CHECK(a.hint_value == 0.5);

    const std::vector<double> single{0, 0, 0, 3, 0};
    CHECK(user_aspect(single, single, 2).features.front() == 3);

    const std::vector<double> tied{1, 2, 2, 2, 0};
    CHECK(user_aspect(tied, tied, 2).features == std::vector<std::size_t>{1, 2});

    CHECK_THROWS_AS(user_aspect(uf, pf, 0), Error);
    CHECK_THROWS_AS(user_aspect(uf, pf, 7), Error);
}

TEST_CASE("user aspect from parameters returns exactly K features and is local") {
    std::mt19937_64 rng(3);
    ModelParams p = fixtures::random_params(tiny_dims(), 5);
    const UserAspect a = user_aspect(p, 1, 2, 2, 5);
    CHECK(a.features.size() == 5);

    // uf = U_W[1] V, pf = P_W^2[2] V.
    std::vector<double> uf(6, 0.0), pf(6, 0.0);
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t j = 0; j < 3; ++j) {
            uf[k] += p.user_explicit(1, j) * p.shared_latent(j, k);
            pf[k] += p.poi_explicit[2](2, j) * p.shared_latent(j, k);
        }
    const UserAspect b = user_aspect(uf, pf, 5);
    CHECK(a.features == b.features);
    CHECK(a.hint_feature == b.hint_feature);

    // Other rows do not matter.
    for (std::size_t u : {0u, 2u, 3u})
        for (double& v : p.user_explicit.row(u)) v = std::uniform_real_distribution<double>(-5, 5)(rng);
    for (std::size_t j : {0u, 1u, 3u, 4u})
        for (double& v : p.poi_explicit[2].row(j)) v = std::uniform_real_distribution<double>(-5, 5)(rng);
    const UserAspect c = user_aspect(p, 1, 2, 2, 5);
    CHECK(c.features == a.features);
    CHECK(c.hint_feature == a.hint_feature);
    CHECK(c.hint_value == a.hint_value);
}

TEST_CASE("poi aspect ratios") {
    PoiAspect a = poi_aspect(std::vector<double>{2, 1, 1});
    CHECK(a.ratios == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(a.hot == 0);
    CHECK_FALSE(a.negative);

    a = poi_aspect(std::vector<double>{0.7});
    CHECK(a.ratios == std::vector<double>{1.0});
    CHECK(a.hot == 0);

    a = poi_aspect(std::vector<double>{3, 3});
    CHECK(a.ratios == std::vector<double>{0.5, 0.5});
    CHECK(a.hot == 0);

    a = poi_aspect(std::vector<double>{1, -1});
    CHECK(a.degenerate);
    CHECK(a.negative);
    CHECK(a.ratios == std::vector<double>{0.5, 0.5});

    a = poi_aspect(std::vector<double>{3, -1});
    CHECK(a.negative);
    CHECK(a.ratios[0] > 1.0);
    CHECK(std::abs(sum(a.softmax) - 1.0) <= 1e-12);

    CHECK_THROWS_AS(poi_aspect(std::vector<double>{}), Error);
}

TEST_CASE("poi aspect ratios sum to one on random dot products") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> dots(1 + rng() % 8);
        const bool positive = trial % 2 == 0;
        for (double& d : dots) d = std::uniform_real_distribution<double>(positive ? 0.0 : -1.0, 1.0)(rng);
        const PoiAspect a = poi_aspect(dots);
        if (std::abs(sum(dots)) > 1e-6) CHECK(std::abs(sum(a.ratios) - 1.0) <= 1e-9);
        if (positive)
            for (double r : a.ratios) CHECK(r >= 0.0);
        for (double r : a.ratios) CHECK(r <= a.ratios[a.hot]);
    }
}

TEST_CASE("poi aspect from parameters") {
    const TrainingData data = fixtures::tiny_data();
    const ModelParams p = fixtures::random_params(tiny_dims(), 6);
    // Parent a (level 0, row 0) has children a1, a2 (level-1 rows 0, 1).
    const PoiAspect a = poi_aspect(p, data.links, 2, 0, 0);
    CHECK(a.children == std::vector<std::size_t>{0, 1});
    for (std::size_t i = 0; i < 2; ++i) {
        double dot = 0;
        for (std::size_t k = 0; k < 4; ++k) dot += p.user_inter[0](2, k) * p.poi_implicit[1](a.children[i], k);
        CHECK(a.dots[i] == doctest::Approx(dot).epsilon(1e-14));
    }
    // b1 has a single child.
    CHECK(poi_aspect(p, data.links, 2, 1, 0).ratios == std::vector<double>{1.0});

    try {
        poi_aspect(p, data.links, 0, 0, 2);
        FAIL("expected LeafPoi");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LeafPoi);
    }
}

TEST_CASE("interaction aspect") {
    InteractionAspect a = interaction_aspect(0.6, 0.8);
    CHECK(a.eta == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(a.important);
    a = interaction_aspect(0.4, 0.8);
    CHECK(a.eta == 0.5);
    CHECK_FALSE(a.important);
    CHECK(interaction_aspect(0.0, 0.3).eta == 0.0);
    try {
        interaction_aspect(0.1, 0.0);
        FAIL("expected ZeroTotalScore");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroTotalScore);
    }

    std::mt19937_64 rng(4);
    for (int i = 0; i < 1000; ++i) {
        const double of = std::uniform_real_distribution<double>(-2, 2)(rng);
        const double oh = std::uniform_real_distribution<double>(-2, 2)(rng);
        const double c = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
        if (std::abs(of + oh) < 1e-3) continue;
        const double eta = interaction_aspect(oh, of + oh).eta;
        CHECK(interaction_aspect(c * oh, c * of + c * oh).eta == doctest::Approx(eta).epsilon(1e-12));
    }
}

TEST_CASE("interaction aspect from a scorer uses the weighted history score") {
    const TrainingData data = fixtures::tiny_data();
    const ModelParams p = fixtures::random_params(tiny_dims(2.0), 7);
    const Scorer s(p, data.links, data.graphs, data.history);
    const InteractionAspect a = interaction_aspect(s, 0, 2, 2, 0.5);
    CHECK(a.eta == doctest::Approx(2.0 * s.historical_score(0, 2, 2) / s.total_score(0, 2, 2)).epsilon(1e-14));
}

TEST_CASE("heat maps are min-max normalised") {
    const TrainingData data = fixtures::tiny_data();
    const ModelParams p = fixtures::random_params(tiny_dims(), 9);
    const Scorer s(p, data.links, data.graphs, data.history);
    const std::vector<std::size_t> users{0, 1, 2, 3};
    const std::vector<std::size_t> pois{0, 1, 2, 3, 4};
    for (const Matrix& m : {user_feature_heatmap(p, users), child_contribution_heatmap(p, data.links, users, 0, 0),
                            interaction_heatmap(s, users, pois, 2)}) {
        double lo = 1e9, hi = -1e9;
        for (double v : m.values()) lo = std::min(lo, v), hi = std::max(hi, v);
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
    CHECK(user_feature_heatmap(p, users).cols() == 6);
    CHECK(child_contribution_heatmap(p, data.links, users, 0, 0).cols() == 2);

    std::ostringstream os;
    Matrix m(1, 2);
    m(0, 1) = 1.0;
    write_heatmap_csv(os, m, {"u0"}, {"f0", "f1"});
    CHECK(os.str() == "id,f0,f1\nu0,0,1\n");
}
