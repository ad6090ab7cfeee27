#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace mpr {

// One POI profile. level == 0 means "derive from the parent chain"; any
// other value is checked against the derived depth.
struct PoiNode {
    std::string id;
    std::optional<std::string> parent_id;
    int level = 0;
    double lat = std::numeric_limits<double>::quiet_NaN();
    double lon = std::numeric_limits<double>::quiet_NaN();
    std::set<std::string> attrs;

    bool has_coordinates() const { return std::isfinite(lat) && std::isfinite(lon); }
};

struct NodeRef {
    int level = 0;          // 1-based
    std::size_t index = 0;  // row within the level, ordered by poi id
};

// Spatial-containment hierarchy. Levels are 1-based (1 = top). Within a
// level nodes are ordered lexicographically by id, which fixes every
// per-level matrix row index. Immutable after construction.
class PoiTree {
public:
    PoiTree() = default;

    int levels() const noexcept { return static_cast<int>(levels_.size()); }
    std::size_t node_count(int level) const { return level_nodes(level).size(); }
    std::size_t total_nodes() const noexcept { return nodes_.size(); }
    std::vector<std::size_t> level_sizes() const;

    const std::vector<std::string>& level_nodes(int level) const;
    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    const PoiNode& node(const std::string& id) const;
    const PoiNode& node_at(int level, std::size_t index) const;
    NodeRef ref(const std::string& id) const;

    const std::vector<std::string>& children(const std::string& id) const;

    // Parent chain of id, nearest first.
    std::vector<std::string> ancestors(const std::string& id) const;

    // Ancestor (or the node itself) at the requested level, if the node is at
    // or below that level.
    std::optional<std::string> ancestor_at(const std::string& id, int level) const;

    // child_rows(l)[i] lists the level l+1 row indices of the children of row i at level l.
    const std::vector<std::vector<std::size_t>>& child_rows(int level) const;

    // All profiles in level order, then id order.
    std::vector<PoiNode> profiles() const;

private:
    friend PoiTree build_tree(std::vector<PoiNode> profiles);

    std::unordered_map<std::string, PoiNode> nodes_;
    std::unordered_map<std::string, NodeRef> index_;
    std::vector<std::vector<std::string>> levels_;
    std::unordered_map<std::string, std::vector<std::string>> children_;
    std::vector<std::vector<std::vector<std::size_t>>> child_rows_;
};

PoiTree build_tree(std::vector<PoiNode> profiles);

// JSONL: {"poi_id": str, "parent_id": str|null, "lat": num, "lon": num, "attrs": [str]}
std::vector<PoiNode> read_poi_profiles(std::istream& in);
std::vector<PoiNode> read_poi_profiles_file(const std::string& path);
void write_poi_profiles(std::ostream& out, const std::vector<PoiNode>& profiles);

}  // namespace mpr
