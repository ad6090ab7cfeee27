#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mpr/matrix.hpp"
#include "mpr/model.hpp"

namespace mpr {

struct UserAspect {
    std::vector<std::size_t> features;  // B_i: K columns of uf, largest first
    std::vector<double> user_values;    // uf at those columns
    std::size_t hint_feature = 0;       // member of B_i with the largest pf
    double hint_value = 0.0;
};

// uf = row u of U_W V, pf = row p of P_W^l V. Ties go to the lower column.
// Throws InvalidConfig when K is 0 or exceeds the feature count.
UserAspect user_aspect(std::span<const double> uf, std::span<const double> pf, std::size_t k);
UserAspect user_aspect(const ModelParams& params, std::size_t user, std::size_t poi, std::size_t level,
                       std::size_t k = 5);

struct PoiAspect {
    std::vector<std::size_t> children;  // rows on level+1, ascending id
    std::vector<double> dots;           // <a_u, a_c>
    std::vector<double> ratios;         // dot / Σ dots; uniform when degenerate
    std::vector<double> softmax;        // softmax over the dots
    std::size_t hot = 0;                // index into children
    bool negative = false;              // some dot < 0, ratios may leave [0,1]
    bool degenerate = false;            // Σ dots == 0
};

// Ratios from raw dot products; `hot` is the largest ratio, ties to the
// lower index. Throws LeafPoi for an empty list.
PoiAspect poi_aspect(std::span<const double> dots);

// a_u = A_u^l[u], a_c = H_p^{l+1}[c] for each child c of `parent`. Throws
// LeafPoi for leaf-level or childless POIs.
PoiAspect poi_aspect(const ModelParams& params, const TreeLinks& links, std::size_t user, std::size_t parent,
                     std::size_t level);

struct InteractionAspect {
    double eta = 0.0;
    bool important = false;  // eta > threshold
};

// η = O_H / O. Throws ZeroTotalScore when O == 0.
InteractionAspect interaction_aspect(double historical, double total, double threshold = 0.5);
// Uses γ·O_H and O from the scorer's model.
InteractionAspect interaction_aspect(const Scorer& scorer, std::size_t user, std::size_t poi, std::size_t level,
                                     double threshold = 0.5);

// Heat maps behind the three hint panels. Values are min-max normalised.
// rows = users, cols = features: M_u = U_W V.
Matrix user_feature_heatmap(const ModelParams& params, std::span<const std::size_t> users);
// rows = users, cols = children of `parent`: POI-aspect ratios.
Matrix child_contribution_heatmap(const ModelParams& params, const TreeLinks& links,
                                  std::span<const std::size_t> users, std::size_t parent, std::size_t level);
// rows = users, cols = `pois`: η; entries with O = 0 count as 0.
Matrix interaction_heatmap(const Scorer& scorer, std::span<const std::size_t> users, std::span<const std::size_t> pois,
                           std::size_t level);

// First column holds row labels, header row holds column labels.
void write_heatmap_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels);

}  // namespace mpr
