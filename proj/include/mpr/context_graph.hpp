#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mpr/dataset.hpp"
#include "mpr/poi_tree.hpp"

namespace mpr {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sigmoid-normalised edge weights between two POIs of one level.
struct EdgeFactors {
    double co_search = 0.5;  // f_q, symmetric
    double co_visit = 0.5;   // f_v, directed: first POI visited before the second
    double distance = 0.5;   // f_d, symmetric
};

struct GraphOptions {
    std::int64_t search_window = 1800;  // Δt1, seconds
    std::int64_t visit_window = 1800;   // Δt2, seconds
    // Pairs closer than this are treated as this far apart.
    double min_distance_m = 1.0;
};

// Per-level POI context graph. Rows follow PoiTree::level_nodes order.
// Pairs without observed co-search/co-visit carry raw count 0, i.e. weight
// 0.5; the distance factor is defined for every pair.
class ContextGraph {
public:
    int level() const noexcept { return level_; }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& pois() const noexcept { return ids_; }
    const GraphOptions& options() const noexcept { return options_; }

    std::uint32_t co_search_count(std::size_t i, std::size_t j) const;
    // Visits of i followed by j within the window.
    std::uint32_t co_visit_count(std::size_t i, std::size_t j) const;
    double distance_m(std::size_t i, std::size_t j) const;

    EdgeFactors factors(std::size_t i, std::size_t j) const;
    // Throws LevelMismatch when either POI is not on this graph's level.
    EdgeFactors factors(const std::string& a, const std::string& b) const;

    // f_q(c,h) * f_v(h->c) * f_d(c,h): weight of history POI h when scoring candidate c.
    double influence(std::size_t candidate, std::size_t history) const {
        return dense_.empty() ? influence_uncached(candidate, history) : dense_[candidate * ids_.size() + history];
    }

    // Ordered pairs with any observed co-search or co-visit, sorted.
    std::vector<std::pair<std::size_t, std::size_t>> observed_pairs() const;

private:
    friend ContextGraph build_graph(const SearchLog&, const InteractionLog&, const PoiTree&, int,
                                    const GraphOptions&);
    double influence_uncached(std::size_t candidate, std::size_t history) const;
    std::uint64_t key(std::size_t i, std::size_t j) const { return std::uint64_t(i) * ids_.size() + j; }

    int level_ = 0;
    GraphOptions options_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> row_;
    std::vector<std::pair<double, double>> xy_;
    std::unordered_map<std::uint64_t, std::uint32_t> co_search_;  // key(min, max)
    std::unordered_map<std::uint64_t, std::uint32_t> co_visit_;   // key(first, second)
    std::vector<double> dense_;
};

// Logs must already be restricted to the training window. Search events on
// POIs below `level` count at their level-`level` ancestor; events above the
// level are ignored. Throws MissingCoordinates if any level POI lacks
// coordinates.
ContextGraph build_graph(const SearchLog& searches, const InteractionLog& level_checkins, const PoiTree& tree,
                         int level, const GraphOptions& options = {});

// CSV "level,poi_i,poi_j,f_q,f_v,f_d" over observed pairs.
void write_graph_csv(std::ostream& out, const ContextGraph& graph);

}  // namespace mpr
