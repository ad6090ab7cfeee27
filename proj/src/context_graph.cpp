#include "mpr/context_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mpr/error.hpp"
#include "mpr/geo.hpp"

namespace mpr {

namespace {

constexpr std::size_t kDenseLimit = 2048;

struct LevelEvent {
    std::int64_t t;
    std::size_t row;
};

// Per-user, time-ordered events mapped onto level rows.
std::map<std::string, std::vector<LevelEvent>> by_user(const InteractionLog& log,
                                                       const std::unordered_map<std::string, std::size_t>& row,
                                                       const PoiTree& tree, int level) {
    std::map<std::string, std::vector<LevelEvent>> out;
    for (const auto& e : log) {
        if (!tree.contains(e.poi_id)) continue;
        const auto anc = tree.ancestor_at(e.poi_id, level);
        if (!anc) continue;
        out[e.user_id].push_back({e.timestamp, row.at(*anc)});
    }
    for (auto& [u, events] : out) {
        std::sort(events.begin(), events.end(), [](const LevelEvent& a, const LevelEvent& b) {
            return a.t != b.t ? a.t < b.t : a.row < b.row;
        });
    }
    return out;
}

}  // namespace

std::uint32_t ContextGraph::co_search_count(std::size_t i, std::size_t j) const {
    auto it = co_search_.find(key(std::min(i, j), std::max(i, j)));
    return it == co_search_.end() ? 0 : it->second;
}

std::uint32_t ContextGraph::co_visit_count(std::size_t i, std::size_t j) const {
    auto it = co_visit_.find(key(i, j));
    return it == co_visit_.end() ? 0 : it->second;
}

double ContextGraph::distance_m(std::size_t i, std::size_t j) const {
    return std::hypot(xy_[i].first - xy_[j].first, xy_[i].second - xy_[j].second);
}

EdgeFactors ContextGraph::factors(std::size_t i, std::size_t j) const {
    if (i >= size() || j >= size()) throw Error(ErrorKind::IndexOutOfRange, "graph row");
    EdgeFactors f;
    f.co_search = sigmoid(static_cast<double>(co_search_count(i, j)));
    f.co_visit = sigmoid(static_cast<double>(co_visit_count(i, j)));
    f.distance = sigmoid(1.0 / std::max(distance_m(i, j), options_.min_distance_m));
    return f;
}

EdgeFactors ContextGraph::factors(const std::string& a, const std::string& b) const {
    auto ia = row_.find(a);
    auto ib = row_.find(b);
    if (ia == row_.end() || ib == row_.end()) {
        throw Error(ErrorKind::LevelMismatch, a + "/" + b + " not on level " + std::to_string(level_));
    }
    return factors(ia->second, ib->second);
}

double ContextGraph::influence_uncached(std::size_t candidate, std::size_t history) const {
    const double fq = sigmoid(static_cast<double>(co_search_count(candidate, history)));
    const double fv = sigmoid(static_cast<double>(co_visit_count(history, candidate)));
    const double fd = sigmoid(1.0 / std::max(distance_m(candidate, history), options_.min_distance_m));
    return fq * fv * fd;
}

std::vector<std::pair<std::size_t, std::size_t>> ContextGraph::observed_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t n = size();
    for (const auto& [k, c] : co_search_) {
        out.emplace_back(k / n, k % n);
        out.emplace_back(k % n, k / n);
    }
    for (const auto& [k, c] : co_visit_) out.emplace_back(k / n, k % n);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ContextGraph build_graph(const SearchLog& searches, const InteractionLog& level_checkins, const PoiTree& tree,
                         int level, const GraphOptions& options) {
    ContextGraph g;
    g.level_ = level;
    g.options_ = options;
    g.ids_ = tree.level_nodes(level);

    double lat0 = 0.0;
    double lon0 = 0.0;
    for (std::size_t i = 0; i < g.ids_.size(); ++i) {
        const PoiNode& n = tree.node(g.ids_[i]);
        if (!n.has_coordinates()) throw Error(ErrorKind::MissingCoordinates, n.id);
        g.row_[n.id] = i;
        lat0 += n.lat;
        lon0 += n.lon;
    }
    if (!g.ids_.empty()) {
        lat0 /= static_cast<double>(g.ids_.size());
        lon0 /= static_cast<double>(g.ids_.size());
    }
    const LocalProjection proj{lat0, lon0};
    for (const auto& id : g.ids_) {
        const PoiNode& n = tree.node(id);
        g.xy_.push_back(proj.project(n.lat, n.lon));
    }

    for (const auto& [user, events] : by_user(searches, g.row_, tree, level)) {
        for (std::size_t a = 0; a < events.size(); ++a) {
            for (std::size_t b = a + 1; b < events.size() && events[b].t - events[a].t <= options.search_window; ++b) {
                if (events[a].row == events[b].row) continue;
                ++g.co_search_[g.key(std::min(events[a].row, events[b].row), std::max(events[a].row, events[b].row))];
            }
        }
    }
    for (const auto& [user, events] : by_user(level_checkins, g.row_, tree, level)) {
        for (std::size_t a = 0; a < events.size(); ++a) {
            for (std::size_t b = a + 1; b < events.size() && events[b].t - events[a].t <= options.visit_window; ++b) {
                if (events[a].row == events[b].row || events[b].t == events[a].t) continue;
                ++g.co_visit_[g.key(events[a].row, events[b].row)];
            }
        }
    }

    const std::size_t n = g.ids_.size();
    if (n <= kDenseLimit) {
        g.dense_.resize(n * n);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t h = 0; h < n; ++h) g.dense_[c * n + h] = g.influence_uncached(c, h);
        }
    }
    return g;
}

void write_graph_csv(std::ostream& out, const ContextGraph& graph) {
    out << "level,poi_i,poi_j,f_q,f_v,f_d\n";
    const auto old = out.precision(17);
    for (const auto& [i, j] : graph.observed_pairs()) {
        const EdgeFactors f = graph.factors(i, j);
        out << graph.level() << ',' << graph.pois()[i] << ',' << graph.pois()[j] << ',' << f.co_search << ','
            << f.co_visit << ',' << f.distance << '\n';
    }
    out.precision(old);
}

}  // namespace mpr
