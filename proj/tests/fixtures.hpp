#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mpr/context_graph.hpp"
#include "mpr/dataset.hpp"
#include "mpr/model.hpp"
#include "mpr/poi_tree.hpp"
#include "mpr/training_data.hpp"

namespace fixtures {

inline mpr::PoiNode node(std::string id, std::optional<std::string> parent, double lat, double lon,
                         std::set<std::string> attrs = {}) {
    mpr::PoiNode n;
    n.id = std::move(id);
    n.parent_id = std::move(parent);
    n.lat = lat;
    n.lon = lon;
    n.attrs = std::move(attrs);
    return n;
}

// Levels of 2, 3 and 5 POIs:
//   a -> a1 -> a1x, a1y      b -> b1 -> b1x, b1y
//     -> a2 -> a2x
inline mpr::PoiTree tiny_tree() {
    using fixtures::node;
    return mpr::build_tree({
        node("a", std::nullopt, 40.00, 116.30, {"park"}),
        node("b", std::nullopt, 40.02, 116.34, {"mall"}),
        node("a1", "a", 40.001, 116.301, {"campus"}),
        node("a2", "a", 39.999, 116.299),
        node("b1", "b", 40.021, 116.341, {"campus"}),
        node("a1x", "a1", 40.0011, 116.3012, {"cafe"}),
        node("a1y", "a1", 40.0012, 116.3008),
        node("a2x", "a2", 39.9991, 116.2992, {"cafe"}),
        node("b1x", "b1", 40.0211, 116.3411),
        node("b1y", "b1", 40.0209, 116.3409, {"cafe"}),
    });
}

inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> level_visits(
    const mpr::PoiTree& tree, const mpr::PerLevelLog& logs, const std::vector<std::string>& users) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out(logs.size());
    for (std::size_t l = 0; l < logs.size(); ++l) {
        for (const auto& c : logs[l]) {
            const auto u = std::size_t(std::find(users.begin(), users.end(), c.user_id) - users.begin());
            out[l].emplace_back(u, tree.ref(c.poi_id).index);
        }
    }
    return out;
}

// m = 4 users over tiny_tree with f = 6 random features, graphs from a
// handful of searches and visits, and per-level histories.
inline mpr::TrainingData tiny_data(std::uint64_t seed = 1) {
    const mpr::PoiTree tree = tiny_tree();
    const std::vector<std::string> users{"u0", "u1", "u2", "u3"};
    const std::int64_t t0 = 1'000'000;
    const mpr::InteractionLog leaf{
        {"u0", "a1x", t0},        {"u0", "a1y", t0 + 600},  {"u0", "b1x", t0 + 9000},
        {"u1", "a2x", t0 + 100},  {"u1", "a1x", t0 + 700},  {"u1", "a1x", t0 + 20000},
        {"u2", "b1y", t0 + 200},  {"u2", "b1x", t0 + 900},  {"u2", "a1y", t0 + 30000},
        {"u3", "a1y", t0 + 300},  {"u3", "a2x", t0 + 500},
    };
    const mpr::SearchLog searches{
        {"u0", "a1x", t0 - 60}, {"u0", "a1y", t0 - 30}, {"u2", "b1x", t0 + 100}, {"u2", "b1y", t0 + 150},
        {"u3", "a2x", t0 + 200}, {"u3", "a1y", t0 + 250},
    };
    const mpr::PerLevelLog logs = mpr::aggregate_upward(leaf, tree);

    mpr::TrainingData data;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t f = 6;
    data.x = mpr::Matrix(users.size(), f);
    for (double& v : data.x.values()) v = unit(rng) < 0.5 ? 0.0 : unit(rng);
    for (int l = 1; l <= tree.levels(); ++l) {
        mpr::Matrix y(tree.node_count(l), f);
        for (double& v : y.values()) v = unit(rng) < 0.5 ? 0.0 : unit(rng);
        data.y.push_back(std::move(y));
        data.graphs.push_back(mpr::build_graph(searches, logs[std::size_t(l - 1)], tree, l));
    }
    data.links = mpr::TreeLinks::from_tree(tree);
    const auto visits = level_visits(tree, logs, users);
    data.history = mpr::UserHistory::build(visits, users.size(), 3);
    data.train = mpr::make_positive_index(logs.size(), users.size());
    for (std::size_t l = 0; l < visits.size(); ++l)
        for (const auto& [u, p] : visits[l]) data.train[l][u].push_back(p);
    mpr::sort_positive_index(data.train);
    return data;
}

// Entries uniform on [-scale, scale]: large enough that ReLU gates go both ways.
inline mpr::ModelParams random_params(const mpr::ModelDims& dims, std::uint64_t seed, double scale = 0.5) {
    mpr::ModelParams p = mpr::ModelParams::zeros(dims);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& t : p.tensors())
        for (double& v : t.tensor->values()) v = u(rng);
    return p;
}

}  // namespace fixtures
