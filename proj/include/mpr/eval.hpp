#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mpr/model.hpp"
#include "mpr/training_data.hpp"

namespace mpr {

// |top-k ∩ relevant| / k. `relevant` must be sorted.
double precision_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k);

// Binary-gain NDCG with a log2(i+1) discount; 0 when nothing is relevant.
double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k);

struct MetricCell {
    double precision = 0.0;
    double ndcg = 0.0;
};

struct LevelMetrics {
    std::size_t users_evaluated = 0;
    std::size_t cold_start_users = 0;  // included in users_evaluated
    std::map<std::size_t, MetricCell> at_k;
};

struct MetricTable {
    std::vector<LevelMetrics> levels;

    // Averages over levels.
    double mean_precision(std::size_t k) const;
    double mean_ndcg(std::size_t k) const;
};

// Per level, every user with at least one relevant POI ranks all level POIs
// minus their training positives; metrics are averaged over those users.
// Users with no training data are scored with zero implicit and
// inter-level user embeddings.
MetricTable evaluate(const ModelParams& params, const TrainingData& data, const PositiveIndex& relevant,
                     std::span<const std::size_t> ks);

// Monte Carlo estimate of the NDCG@k a uniformly random ranking achieves
// under the same protocol as evaluate().
double random_ndcg_baseline(const TrainingData& data, const PositiveIndex& relevant, std::size_t level,
                            std::size_t k, std::size_t samples, std::uint64_t seed);

// CSV "level,model,metric,k,value,users", levels 1-based.
void write_metric_csv(std::ostream& out, const std::vector<std::pair<std::string, MetricTable>>& tables);

}  // namespace mpr
