#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mpr/poi_tree.hpp"

namespace mpr {

// A timestamped user action on a POI (seconds since epoch).
struct Interaction {
    std::string user_id;
    std::string poi_id;
    std::int64_t timestamp = 0;

    auto operator<=>(const Interaction&) const = default;
};

using CheckIn = Interaction;
using SearchEvent = Interaction;
using InteractionLog = std::vector<CheckIn>;
using SearchLog = std::vector<SearchEvent>;
// Index l-1 holds the level-l log.
using PerLevelLog = std::vector<InteractionLog>;

// Raw profile attributes for users or POIs. Categorical attributes may be
// multi-valued (a user with several hobbies).
struct AttributeProfile {
    std::map<std::string, double> numeric;
    std::set<std::pair<std::string, std::string>> categorical;
};

struct UserProfile {
    std::string id;
    AttributeProfile attrs;
};

// POI attribute strings: "key=value" with a numeric value becomes a numeric
// attribute, "key=value" otherwise a categorical one, and a bare "tag"
// becomes categorical ("tag", tag).
AttributeProfile poi_attributes(const PoiNode& node);

struct IngestOptions {
    // Throw UnknownPoi/UnknownUser instead of skipping unresolvable rows.
    bool strict = false;
};

struct IngestResult {
    InteractionLog checkins;
    SearchLog searches;
    std::vector<UserProfile> users;
    std::size_t skipped_checkins = 0;
    std::size_t skipped_searches = 0;
};

// CSV with header "user_id,poi_id,timestamp".
InteractionLog read_interactions(std::istream& in, const std::string& source = "csv");
void write_interactions(std::ostream& out, const InteractionLog& log);

// JSONL: {"user_id": str, "attrs": {name: number | string | [string] | bool}}
std::vector<UserProfile> read_user_profiles(std::istream& in);
void write_user_profiles(std::ostream& out, const std::vector<UserProfile>& users);

IngestResult ingest(const std::string& checkin_path, const std::string& search_path,
                    const std::string& user_profile_path, const PoiTree& tree,
                    const IngestOptions& options = {});

// Every check-in also counts at each ancestor, with the same user and time.
PerLevelLog aggregate_upward(const InteractionLog& log, const PoiTree& tree);

// Repeatedly drops users with fewer than min_user_pois distinct POIs and
// POIs with fewer than min_poi_users distinct users until nothing changes.
// Throws EmptyAfterFilter when a non-empty log filters down to nothing.
InteractionLog filter_sparse(const InteractionLog& log, std::size_t min_user_pois = 10,
                             std::size_t min_poi_users = 10);
PerLevelLog filter_sparse(const PerLevelLog& logs, std::size_t min_user_pois = 10,
                          std::size_t min_poi_users = 10);

struct LevelSplit {
    InteractionLog train;
    InteractionLog validation;
    InteractionLog test;
};

struct DatasetSplit {
    std::vector<LevelSplit> levels;
    std::vector<std::string> users;  // sorted
    std::int64_t start = 0;
    std::int64_t train_end = 0;   // train: [start, train_end)
    std::int64_t test_start = 0;  // test: [test_start, end]; validation in between
    std::int64_t end = 0;
};

constexpr std::int64_t kSecondsPerDay = 86400;

// Chronological split; (user, poi) pairs seen in train are removed from
// validation and test at the same level.
DatasetSplit split_chronological(const PerLevelLog& logs, std::int64_t train_window_seconds,
                                 std::int64_t test_window_seconds = 15 * kSecondsPerDay);

// Re-checks the split invariants; returns a description of the first
// violation or an empty string.
std::string check_split(const DatasetSplit& split);

struct SynthConfig {
    std::size_t users = 200;
    std::vector<std::size_t> level_sizes{10, 50, 200};
    std::size_t latent_dim = 8;
    double noise = 0.02;             // share of session starts drawn uniformly over leaves
    double temperature = 0.25;       // softmax temperature of the preference model
    double child_spread = 0.6;       // latent deviation of a child from its parent
    std::size_t sessions_per_user = 30;
    double session_continue = 0.6;   // chance a session moves on to a nearby leaf
    std::size_t max_session_length = 4;
    std::size_t companions = 6;      // nearest leaves reachable from a leaf within a session
    double search_rate = 0.7;        // chance a check-in is preceded by a search
    double alt_search_rate = 0.5;    // chance that search also covers a nearby alternative
    std::size_t days = 90;
    double center_lat = 39.99;
    double center_lon = 116.33;
    double top_radius_m = 12000.0;
    double poi_tag_threshold = 0.8;  // latent dims above this become POI tags
    std::int64_t start_timestamp = 1'600'000'000;
};

// Plain "key = value" lines; '#' starts a comment. Unknown keys are rejected.
SynthConfig parse_synth_config(std::istream& in);
SynthConfig read_synth_config_file(const std::string& path);
void write_synth_config(std::ostream& out, const SynthConfig& cfg);

struct SyntheticData {
    std::vector<PoiNode> pois;  // carries coordinates and attribute tags
    InteractionLog checkins;
    SearchLog searches;
    std::vector<UserProfile> users;
};

SyntheticData generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace mpr
