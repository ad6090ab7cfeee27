#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "mpr/error.hpp"
#include "mpr/poi_tree.hpp"

using namespace mpr;
using fixtures::node;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an mpr::Error");
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("chain region > campus > building") {
    const PoiTree t = build_tree({node("bldg", "campus", 1, 1), node("region", std::nullopt, 1, 1),
                                  node("campus", "region", 1, 1)});
    CHECK(t.levels() == 3);
    CHECK(t.level_sizes() == std::vector<std::size_t>{1, 1, 1});
    CHECK(t.level_nodes(2) == std::vector<std::string>{"campus"});
    CHECK(t.ancestors("bldg") == std::vector<std::string>{"campus", "region"});
    CHECK(*t.ancestor_at("bldg", 1) == "region");
    CHECK(*t.ancestor_at("campus", 2) == "campus");
    CHECK_FALSE(t.ancestor_at("region", 2).has_value());
}

TEST_CASE("single root") {
    const PoiTree t = build_tree({node("r", std::nullopt, 0, 0)});
    CHECK(t.levels() == 1);
    CHECK(t.level_sizes() == std::vector<std::size_t>{1});
    CHECK(t.children("r").empty());
}

TEST_CASE("structural errors") {
    CHECK(kind_of([] { build_tree({node("a", "b", 0, 0), node("b", "a", 0, 0)}); }) == ErrorKind::CycleDetected);
    CHECK(kind_of([] { build_tree({node("a", "ghost", 0, 0)}); }) == ErrorKind::UnknownParent);
    CHECK(kind_of([] {
              auto n = node("c", "r", 0, 0);
              n.level = 3;
              build_tree({node("r", std::nullopt, 0, 0), n});
          }) == ErrorKind::LevelMismatch);
    CHECK(kind_of([] {
              build_tree({node("r", std::nullopt, 0, 0), node("s", std::nullopt, 0, 0), node("c", "r", 0, 0),
                          node("c", "s", 0, 0)});
          }) == ErrorKind::MultipleParents);
    CHECK(kind_of([] { build_tree({node("r", std::nullopt, 0, 0), node("r", std::nullopt, 0, 0)}); }) ==
          ErrorKind::DuplicateNode);
}

TEST_CASE("lookups") {
    const PoiTree t = fixtures::tiny_tree();
    CHECK(t.children("a") == std::vector<std::string>{"a1", "a2"});
    CHECK(t.children("a1x").empty());
    CHECK(kind_of([&] { t.children("nope"); }) == ErrorKind::UnknownNode);
    CHECK(kind_of([&] { t.level_nodes(0); }) == ErrorKind::LevelOutOfRange);
    CHECK(kind_of([&] { t.level_nodes(4); }) == ErrorKind::LevelOutOfRange);
    CHECK(t.level_sizes() == std::vector<std::size_t>{2, 3, 5});
    CHECK(t.ref("b1x").level == 3);
    CHECK(t.ref("b1x").index == 3);
    CHECK(t.child_rows(2)[0] == std::vector<std::size_t>{0, 1});
    CHECK(t.child_rows(1)[1] == std::vector<std::size_t>{2});
}

TEST_CASE("ragged trees are accepted") {
    const PoiTree t = build_tree({node("r", std::nullopt, 0, 0), node("lonely", std::nullopt, 0, 0),
                                  node("c", "r", 0, 0), node("g", "c", 0, 0)});
    CHECK(t.levels() == 3);
    CHECK(t.level_nodes(1) == std::vector<std::string>{"lonely", "r"});
    CHECK(t.child_rows(1)[0].empty());
}

TEST_CASE("structure properties on random trees") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PoiNode> nodes;
        std::vector<std::vector<std::string>> by_level(1);
        const int roots = 1 + int(rng() % 3);
        for (int i = 0; i < roots; ++i) {
            nodes.push_back(node("r" + std::to_string(i), std::nullopt, 0, 0));
            by_level[0].push_back(nodes.back().id);
        }
        const int depth = 1 + int(rng() % 4);
        for (int l = 1; l < depth; ++l) {
            by_level.emplace_back();
            const int count = 1 + int(rng() % 8);
            for (int i = 0; i < count; ++i) {
                const auto& parents = by_level[std::size_t(l - 1)];
                const std::string id = "n" + std::to_string(l) + "_" + std::to_string(i);
                nodes.push_back(node(id, parents[rng() % parents.size()], 0, 0));
                by_level[std::size_t(l)].push_back(id);
            }
        }
        const PoiTree t = build_tree(nodes);

        std::size_t total = 0;
        for (int l = 1; l <= t.levels(); ++l) {
            const auto& ids = t.level_nodes(l);
            total += ids.size();
            CHECK(std::is_sorted(ids.begin(), ids.end()));
            for (const auto& id : ids) {
                for (const auto& c : t.children(id)) {
                    CHECK(*t.node(c).parent_id == id);
                    CHECK(t.node(c).level == t.node(id).level + 1);
                }
            }
        }
        CHECK(total == nodes.size());
        CHECK(total == t.total_nodes());

        // Input order does not matter.
        std::shuffle(nodes.begin(), nodes.end(), rng);
        const PoiTree u = build_tree(nodes);
        for (int l = 1; l <= t.levels(); ++l) CHECK(u.level_nodes(l) == t.level_nodes(l));
    }
}

TEST_CASE("profile JSONL round trip") {
    const PoiTree t = fixtures::tiny_tree();
    std::stringstream ss;
    write_poi_profiles(ss, t.profiles());
    const PoiTree u = build_tree(read_poi_profiles(ss));
    CHECK(u.level_sizes() == t.level_sizes());
    CHECK(u.node("a1x").attrs == t.node("a1x").attrs);
    CHECK(u.node("a1x").lat == t.node("a1x").lat);
    CHECK(*u.node("b1y").parent_id == "b1");

    std::istringstream bad("{\"poi_id\": \"x\", \"parent_id\": null}\nnot json\n");
    try {
        read_poi_profiles(bad);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
}
