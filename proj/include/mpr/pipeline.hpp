#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mpr/context_graph.hpp"
#include "mpr/dataset.hpp"
#include "mpr/features.hpp"
#include "mpr/poi_tree.hpp"
#include "mpr/training.hpp"
#include "mpr/training_data.hpp"

namespace mpr {

// λ_Θ picked on validation P@10 for the default synthetic generator; the
// library default of 1 shrinks every embedding to noise at that scale.
constexpr double kSyntheticLambdaReg = 0.1;

// Everything a run needs, as one flat key = value file.
struct RunConfig {
    TrainConfig train;

    // Raw inputs for ingest.
    std::string pois_path;
    std::string checkins_path;
    std::string searches_path;
    std::string users_path;

    std::string bundle_dir;       // prepared dataset consumed by train/evaluate/...
    std::string checkpoint_path;  // empty: <out>/model.ckpt
    std::string out_dir = "out";

    std::int64_t search_window = 1800;  // Δt1, seconds
    std::int64_t visit_window = 1800;   // Δt2, seconds
    std::size_t min_user_pois = 10;
    std::size_t min_poi_users = 10;
    std::int64_t train_days = 60;
    std::int64_t test_days = 15;
    std::size_t history_size = 3;  // t

    std::vector<std::size_t> ks{5, 10, 20};
    std::size_t hint_k = 5;
    double hint_threshold = 0.5;
    std::size_t ablation_seeds = 5;

    void validate() const;
};

// Unknown keys and malformed values throw InvalidConfig.
void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig parse_run_config(std::istream& in);
RunConfig read_run_config_file(const std::string& path);
void write_run_config(std::ostream& out, const RunConfig& cfg);

// A filtered, split dataset with its training view.
struct PreparedData {
    PoiTree tree;                       // pruned to POIs that survived filtering
    std::vector<UserProfile> users;     // row order, sorted by id
    SearchLog searches;                 // restricted to tree POIs
    DatasetSplit split;
    FeatureMatrices features;
    TrainingData training;
    PositiveIndex validation;
    PositiveIndex test;

    std::size_t user_row(const std::string& id) const;  // UnknownUser
    std::size_t poi_row(const std::string& id, std::size_t level) const;  // model level, UnknownPoi
    const std::vector<std::string>& poi_ids(std::size_t level) const { return tree.level_nodes(int(level) + 1); }
};

// Filters the raw check-ins to the 10/10 fixed point (thresholds from cfg),
// prunes the tree, aggregates upward, splits chronologically and derives
// features, graphs and histories from the training window only.
PreparedData prepare_dataset(const PoiTree& tree, const InteractionLog& checkins, const SearchLog& searches,
                             const std::vector<UserProfile>& profiles, const RunConfig& cfg);

// Rebuilds the training view from an already split dataset.
PreparedData derive_dataset(PoiTree tree, std::vector<UserProfile> users, SearchLog searches, DatasetSplit split,
                            const RunConfig& cfg);

// Directory layout: pois.jsonl, users.jsonl, searches.csv,
// level<l>_{train,validation,test}.csv, split.json, X.mat, Y<l>.mat,
// graph_level<l>.csv, features.json.
void write_bundle(const PreparedData& data, const std::string& dir);
PreparedData load_bundle(const std::string& dir, const RunConfig& cfg);

}  // namespace mpr
