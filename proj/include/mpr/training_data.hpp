#pragma once

#include <cstddef>
#include <vector>

#include "mpr/context_graph.hpp"
#include "mpr/matrix.hpp"
#include "mpr/model.hpp"

namespace mpr {

// [level][user] -> sorted, de-duplicated POI rows.
using PositiveIndex = std::vector<std::vector<std::vector<std::size_t>>>;

PositiveIndex make_positive_index(std::size_t levels, std::size_t users);
void sort_positive_index(PositiveIndex& index);

// Everything the optimiser may read: explicit feature matrices, tree links,
// context graphs, user histories and the binarised training check-ins.
// Built from the training split only.
struct TrainingData {
    Matrix x;               // m x f
    std::vector<Matrix> y;  // per level, n_l x f
    TreeLinks links;
    std::vector<ContextGraph> graphs;
    UserHistory history;
    PositiveIndex train;

    std::size_t levels() const noexcept { return y.size(); }
    std::size_t users() const noexcept { return x.rows(); }
    std::size_t pois(std::size_t level) const { return y.at(level).rows(); }

    // True when the user has no training check-in on any level.
    bool is_cold(std::size_t user) const;
};

}  // namespace mpr
