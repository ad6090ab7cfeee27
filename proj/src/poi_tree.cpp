#include "mpr/poi_tree.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "mpr/error.hpp"

namespace mpr {

namespace {

const std::vector<std::string> kNoChildren;

}  // namespace

std::vector<std::size_t> PoiTree::level_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& lv : levels_) out.push_back(lv.size());
    return out;
}

const std::vector<std::string>& PoiTree::level_nodes(int level) const {
    if (level < 1 || level > levels()) {
        throw Error(ErrorKind::LevelOutOfRange,
                    "level " + std::to_string(level) + " outside 1.." + std::to_string(levels()));
    }
    return levels_[static_cast<std::size_t>(level - 1)];
}

const PoiNode& PoiTree::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorKind::UnknownNode, id);
    return it->second;
}

const PoiNode& PoiTree::node_at(int level, std::size_t index) const {
    const auto& ids = level_nodes(level);
    if (index >= ids.size()) throw Error(ErrorKind::IndexOutOfRange, "row " + std::to_string(index));
    return nodes_.at(ids[index]);
}

NodeRef PoiTree::ref(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::UnknownNode, id);
    return it->second;
}

const std::vector<std::string>& PoiTree::children(const std::string& id) const {
    if (!contains(id)) throw Error(ErrorKind::UnknownNode, id);
    auto it = children_.find(id);
    return it == children_.end() ? kNoChildren : it->second;
}

std::vector<std::string> PoiTree::ancestors(const std::string& id) const {
    std::vector<std::string> out;
    const PoiNode* cur = &node(id);
    while (cur->parent_id) {
        out.push_back(*cur->parent_id);
        cur = &nodes_.at(*cur->parent_id);
    }
    return out;
}

std::optional<std::string> PoiTree::ancestor_at(const std::string& id, int level) const {
    const PoiNode* cur = &node(id);
    if (cur->level < level) return std::nullopt;
    while (cur->level > level) cur = &nodes_.at(*cur->parent_id);
    return cur->id;
}

const std::vector<std::vector<std::size_t>>& PoiTree::child_rows(int level) const {
    level_nodes(level);
    return child_rows_[static_cast<std::size_t>(level - 1)];
}

std::vector<PoiNode> PoiTree::profiles() const {
    std::vector<PoiNode> out;
    out.reserve(nodes_.size());
    for (const auto& lv : levels_) {
        for (const auto& id : lv) out.push_back(nodes_.at(id));
    }
    return out;
}

PoiTree build_tree(std::vector<PoiNode> profiles) {
    PoiTree tree;
    for (auto& p : profiles) {
        auto it = tree.nodes_.find(p.id);
        if (it != tree.nodes_.end()) {
            if (it->second.parent_id != p.parent_id) throw Error(ErrorKind::MultipleParents, p.id);
            throw Error(ErrorKind::DuplicateNode, p.id);
        }
        std::string id = p.id;
        tree.nodes_.emplace(std::move(id), std::move(p));
    }
    for (const auto& [id, n] : tree.nodes_) {
        if (n.parent_id && tree.nodes_.count(*n.parent_id) == 0) {
            throw Error(ErrorKind::UnknownParent, id + " -> " + *n.parent_id);
        }
    }

    // Depth by walking parent chains; 1 = on stack, 2 = resolved.
    std::unordered_map<std::string, int> depth;
    std::unordered_map<std::string, int> state;
    for (const auto& [start, unused] : tree.nodes_) {
        if (state[start] == 2) continue;
        std::vector<std::string> chain;
        std::string cur = start;
        while (true) {
            int& s = state[cur];
            if (s == 2) break;
            if (s == 1) throw Error(ErrorKind::CycleDetected, "through " + cur);
            s = 1;
            chain.push_back(cur);
            const PoiNode& n = tree.nodes_.at(cur);
            if (!n.parent_id) break;
            cur = *n.parent_id;
        }
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            const PoiNode& n = tree.nodes_.at(*it);
            depth[*it] = n.parent_id ? depth.at(*n.parent_id) + 1 : 1;
            state[*it] = 2;
        }
    }

    int max_depth = 0;
    for (auto& [id, n] : tree.nodes_) {
        const int d = depth.at(id);
        if (n.level != 0 && n.level != d) {
            throw Error(ErrorKind::LevelMismatch, id + " declares level " + std::to_string(n.level) +
                                                      " but sits at depth " + std::to_string(d));
        }
        n.level = d;
        max_depth = std::max(max_depth, d);
    }

    tree.levels_.assign(static_cast<std::size_t>(max_depth), {});
    for (const auto& [id, n] : tree.nodes_) {
        tree.levels_[static_cast<std::size_t>(n.level - 1)].push_back(id);
        if (n.parent_id) tree.children_[*n.parent_id].push_back(id);
    }
    for (auto& lv : tree.levels_) std::sort(lv.begin(), lv.end());
    for (auto& [id, kids] : tree.children_) std::sort(kids.begin(), kids.end());

    for (int l = 1; l <= max_depth; ++l) {
        const auto& ids = tree.levels_[static_cast<std::size_t>(l - 1)];
        for (std::size_t i = 0; i < ids.size(); ++i) tree.index_[ids[i]] = NodeRef{l, i};
    }
    tree.child_rows_.assign(static_cast<std::size_t>(max_depth), {});
    for (int l = 1; l <= max_depth; ++l) {
        const auto& ids = tree.levels_[static_cast<std::size_t>(l - 1)];
        auto& rows = tree.child_rows_[static_cast<std::size_t>(l - 1)];
        rows.resize(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto it = tree.children_.find(ids[i]);
            if (it == tree.children_.end()) continue;
            for (const auto& c : it->second) rows[i].push_back(tree.index_.at(c).index);
        }
    }
    return tree;
}

std::vector<PoiNode> read_poi_profiles(std::istream& in) {
    std::vector<PoiNode> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            PoiNode n;
            n.id = j.at("poi_id").get<std::string>();
            if (j.contains("parent_id") && !j.at("parent_id").is_null()) {
                n.parent_id = j.at("parent_id").get<std::string>();
            }
            if (j.contains("lat") && !j.at("lat").is_null()) n.lat = j.at("lat").get<double>();
            if (j.contains("lon") && !j.at("lon").is_null()) n.lon = j.at("lon").get<double>();
            if (j.contains("level")) n.level = j.at("level").get<int>();
            if (j.contains("attrs")) {
                for (const auto& a : j.at("attrs")) n.attrs.insert(a.get<std::string>());
            }
            out.push_back(std::move(n));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ParseError, "poi profile line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<PoiNode> read_poi_profiles_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return read_poi_profiles(in);
}

void write_poi_profiles(std::ostream& out, const std::vector<PoiNode>& profiles) {
    for (const auto& n : profiles) {
        nlohmann::json j;
        j["poi_id"] = n.id;
        j["parent_id"] = n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json(nullptr);
        j["lat"] = n.has_coordinates() ? nlohmann::json(n.lat) : nlohmann::json(nullptr);
        j["lon"] = n.has_coordinates() ? nlohmann::json(n.lon) : nlohmann::json(nullptr);
        j["attrs"] = n.attrs;
        out << j.dump() << '\n';
    }
}

}  // namespace mpr
