#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mpr/dataset.hpp"
#include "mpr/error.hpp"

using namespace mpr;

namespace {

std::string tmp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("mpr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

// Distinct POIs per user and distinct users per POI.
std::pair<std::map<std::string, std::set<std::string>>, std::map<std::string, std::set<std::string>>> degrees(
    const InteractionLog& log) {
    std::map<std::string, std::set<std::string>> up, pu;
    for (const auto& e : log) {
        up[e.user_id].insert(e.poi_id);
        pu[e.poi_id].insert(e.user_id);
    }
    return {up, pu};
}

}  // namespace

TEST_CASE("ingest reads, resolves and counts skipped rows") {
    const std::string dir = tmp_dir("ingest");
    write_file(dir + "/c.csv", "user_id,poi_id,timestamp\nu0,a1x,10\nu1,b1y,20\nu0,a,30\nu0,zzz,40\n");
    write_file(dir + "/s.csv", "user_id,poi_id,timestamp\n");
    write_file(dir + "/u.jsonl", "{\"user_id\": \"u0\", \"attrs\": {\"age\": 18, \"hobby\": [\"reading\"]}}\n"
                                 "{\"user_id\": \"u1\", \"attrs\": {}}\n");
    const PoiTree tree = fixtures::tiny_tree();
    const IngestResult r = ingest(dir + "/c.csv", dir + "/s.csv", dir + "/u.jsonl", tree);
    CHECK(r.checkins.size() == 3);
    CHECK(r.skipped_checkins == 1);
    CHECK(r.searches.empty());
    CHECK(r.users.size() == 2);
    CHECK(r.users[0].attrs.numeric.at("age") == 18.0);
    CHECK(r.users[0].attrs.categorical.count({"hobby", "reading"}) == 1);

    try {
        ingest(dir + "/c.csv", dir + "/s.csv", dir + "/u.jsonl", tree, {.strict = true});
        FAIL("strict ingest accepted an unknown POI");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownPoi);
    }

    write_file(dir + "/bad.csv", "user_id,poi_id,timestamp\nu0,a1x,10\nu0,a1x\n");
    try {
        ingest(dir + "/bad.csv", dir + "/s.csv", dir + "/u.jsonl", tree);
        FAIL("malformed row accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    try {
        ingest(dir + "/missing.csv", dir + "/s.csv", dir + "/u.jsonl", tree);
        FAIL("missing file accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
        CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
    }
}

TEST_CASE("interaction CSV round trip") {
    const InteractionLog log{{"u1", "p", 5}, {"u0", "q", 7}};
    std::stringstream ss;
    write_interactions(ss, log);
    CHECK(read_interactions(ss) == log);
    std::istringstream empty("");
    CHECK(read_interactions(empty).empty());
}

TEST_CASE("aggregate_upward") {
    const PoiTree tree = fixtures::tiny_tree();
    auto logs = aggregate_upward({{"u", "a1x", 5}}, tree);
    REQUIRE(logs.size() == 3);
    CHECK(logs[0] == InteractionLog{{"u", "a", 5}});
    CHECK(logs[1] == InteractionLog{{"u", "a1", 5}});
    CHECK(logs[2] == InteractionLog{{"u", "a1x", 5}});

    logs = aggregate_upward({{"u", "b", 5}}, tree);
    CHECK(logs[0].size() == 1);
    CHECK(logs[1].empty());
    CHECK(logs[2].empty());

    logs = aggregate_upward({{"u", "b1x", 5}, {"v", "b1x", 6}}, tree);
    for (const auto& lv : logs) CHECK(lv.size() == 2);
}

TEST_CASE("aggregate_upward counts every ancestor") {
    const PoiTree tree = fixtures::tiny_tree();
    std::mt19937_64 rng(3);
    InteractionLog log;
    std::vector<std::string> all;
    for (int l = 1; l <= 3; ++l)
        for (const auto& id : tree.level_nodes(l)) all.push_back(id);
    for (int i = 0; i < 200; ++i) log.push_back({"u" + std::to_string(rng() % 7), all[rng() % all.size()], std::int64_t(rng() % 1000)});
    const auto logs = aggregate_upward(log, tree);
    for (int l = 1; l <= 3; ++l) {
        std::size_t expected = 0;
        for (const auto& e : log) expected += tree.ancestor_at(e.poi_id, l).has_value() ? 1 : 0;
        CHECK(logs[std::size_t(l - 1)].size() == expected);
    }
}

TEST_CASE("filter_sparse") {
    SUBCASE("user with 9 distinct POIs is dropped") {
        InteractionLog log;
        for (int p = 0; p < 9; ++p) log.push_back({"u", "p" + std::to_string(p), p});
        for (int p = 0; p < 10; ++p) log.push_back({"v", "p" + std::to_string(p), p});
        const auto out = filter_sparse(log, 10, 1);
        for (const auto& e : out) CHECK(e.user_id == "v");
        CHECK(out.size() == 10);
    }
    SUBCASE("zero thresholds keep everything") {
        const InteractionLog log{{"u", "p", 1}, {"v", "q", 2}};
        CHECK(filter_sparse(log, 0, 0) == log);
    }
    SUBCASE("removal cascades to a fixed point") {
        // Users u0..u9 visit p0..p9 (10 POIs each, 10 visitors each).
        // u10 visits only nine POIs including x; x has ten visitors only
        // while u10 survives, so dropping u10 must also drop x.
        InteractionLog log;
        for (int u = 0; u < 10; ++u)
            for (int p = 0; p < 10; ++p) log.push_back({"u" + std::to_string(u), "p" + std::to_string(p), u * 100 + p});
        for (int p = 0; p < 8; ++p) log.push_back({"u10", "p" + std::to_string(p), 5000 + p});
        log.push_back({"u10", "x", 6000});
        for (int u = 0; u < 9; ++u) log.push_back({"u" + std::to_string(u), "x", 7000 + u});
        const auto out = filter_sparse(log, 10, 10);
        const auto [up, pu] = degrees(out);
        CHECK(up.count("u10") == 0);
        CHECK(pu.count("x") == 0);
        CHECK(up.size() == 10);
        CHECK(pu.size() == 10);
    }
    SUBCASE("everything filtered") {
        CHECK_THROWS_AS(filter_sparse(InteractionLog{{"u", "p", 1}}, 10, 10), Error);
        CHECK(filter_sparse(InteractionLog{}, 10, 10).empty());
    }
}

TEST_CASE("filter_sparse fixed point property") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        InteractionLog log;
        for (int i = 0; i < 3000; ++i)
            log.push_back({"u" + std::to_string(rng() % 60), "p" + std::to_string(rng() % 40 + (rng() % 3 ? 0 : 40)), i});
        InteractionLog out;
        try {
            out = filter_sparse(log, 10, 10);
        } catch (const Error&) {
            continue;
        }
        const auto [up, pu] = degrees(out);
        for (const auto& [u, ps] : up) CHECK(ps.size() >= 10);
        for (const auto& [p, us] : pu) CHECK(us.size() >= 10);
        CHECK(filter_sparse(out, 10, 10) == out);
    }
}

TEST_CASE("split_chronological") {
    const std::int64_t day = kSecondsPerDay;
    SUBCASE("90 days into 60 / 15 / 15") {
        PerLevelLog logs(1);
        for (int d = 0; d <= 90; ++d) logs[0].push_back({"u" + std::to_string(d % 3), "p" + std::to_string(d), d * day});
        const DatasetSplit s = split_chronological(logs, 60 * day, 15 * day);
        CHECK(s.train_end - s.start == 60 * day);
        CHECK(s.end - s.test_start == 15 * day);
        CHECK(s.test_start - s.train_end == 15 * day);
        CHECK(s.levels[0].train.size() == 60);
        CHECK(s.levels[0].validation.size() == 16);
        CHECK(s.levels[0].test.size() == 15);
        CHECK(check_split(s).empty());
    }
    SUBCASE("train pairs are pruned from test") {
        PerLevelLog logs(1);
        logs[0] = {{"u", "p", 0}, {"u", "p", 89 * day}, {"u", "q", 89 * day}, {"v", "p", 90 * day}};
        const DatasetSplit s = split_chronological(logs, 60 * day, 15 * day);
        CHECK(s.levels[0].test == InteractionLog{{"u", "q", 89 * day}, {"v", "p", 90 * day}});
    }
    SUBCASE("windows longer than the log") {
        PerLevelLog logs(1);
        logs[0] = {{"u", "p", 0}, {"u", "p", 10 * day}};
        try {
            split_chronological(logs, 60 * day, 15 * day);
            FAIL("expected WindowTooLarge");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::WindowTooLarge);
        }
    }
}

TEST_CASE("split invariants on random logs") {
    std::mt19937_64 rng(9);
    const std::int64_t day = kSecondsPerDay;
    for (int trial = 0; trial < 20; ++trial) {
        PerLevelLog logs(2);
        for (auto& lv : logs)
            for (int i = 0; i < 500; ++i)
                lv.push_back({"u" + std::to_string(rng() % 10), "p" + std::to_string(rng() % 15),
                              std::int64_t(rng() % (90 * day))});
        const DatasetSplit s = split_chronological(logs, 60 * day, 15 * day);
        CHECK(check_split(s).empty());
        for (const auto& lv : s.levels) {
            std::set<std::pair<std::string, std::string>> train;
            for (const auto& e : lv.train) train.emplace(e.user_id, e.poi_id);
            for (const auto& e : lv.validation) CHECK(train.count({e.user_id, e.poi_id}) == 0);
            for (const auto& e : lv.test) CHECK(train.count({e.user_id, e.poi_id}) == 0);
        }
    }
}

TEST_CASE("synthetic generator") {
    SynthConfig cfg;
    const SyntheticData a = generate_synthetic(cfg, 7);
    const SyntheticData b = generate_synthetic(cfg, 7);
    CHECK(a.checkins == b.checkins);
    CHECK(a.searches == b.searches);
    std::stringstream sa, sb;
    write_poi_profiles(sa, a.pois);
    write_poi_profiles(sb, b.pois);
    CHECK(sa.str() == sb.str());
    CHECK(generate_synthetic(cfg, 8).checkins != a.checkins);

    const PoiTree tree = build_tree(a.pois);
    CHECK(tree.level_sizes() == std::vector<std::size_t>{10, 50, 200});
    CHECK(a.users.size() == 200);
    for (const auto& n : a.pois) CHECK(n.has_coordinates());
    for (const auto& c : a.checkins) CHECK(tree.ref(c.poi_id).level == 3);

    SynthConfig bad;
    bad.users = 0;
    CHECK_THROWS_AS(generate_synthetic(bad, 1), Error);
    bad = {};
    bad.level_sizes = {10, 0};
    CHECK_THROWS_AS(generate_synthetic(bad, 1), Error);
}

TEST_CASE("synthetic noise 1 spreads check-ins uniformly over leaves") {
    SynthConfig cfg;
    cfg.users = 100;
    cfg.level_sizes = {5, 20};
    cfg.noise = 1.0;
    cfg.session_continue = 0.0;
    cfg.sessions_per_user = 100;
    const SyntheticData d = generate_synthetic(cfg, 3);
    std::map<std::string, double> counts;
    for (const auto& c : d.checkins) counts[c.poi_id] += 1.0;
    REQUIRE(d.checkins.size() >= 10000);
    const double expected = double(d.checkins.size()) / 20.0;
    double chi2 = 0.0;
    for (const auto& n : d.pois) {
        if (!n.parent_id) continue;
        const double o = counts[n.id];
        chi2 += (o - expected) * (o - expected) / expected;
    }
    const boost::math::chi_squared dist(19);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("synth config round trip") {
    SynthConfig cfg;
    cfg.temperature = 0.3;
    cfg.level_sizes = {3, 9};
    std::stringstream ss;
    write_synth_config(ss, cfg);
    const SynthConfig back = parse_synth_config(ss);
    CHECK(back.temperature == 0.3);
    CHECK(back.level_sizes == cfg.level_sizes);
    std::istringstream bad("nonsense = 1\n");
    CHECK_THROWS_AS(parse_synth_config(bad), Error);
}
