#include "mpr/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "mpr/error.hpp"

namespace mpr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw Error(ErrorKind::InvalidConfig, key + ": bad value '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidConfig, key + ": bad value '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorKind::InvalidConfig, key + ": expected true or false, got '" + v + "'");
}

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define MPR_SIZE(name, member)                                                                      \
    Field {                                                                                         \
        name, [](RunConfig& c, const std::string& v) { c.member = parse_number<std::size_t>(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.member); }                             \
    }
#define MPR_INT(name, member)                                                                        \
    Field {                                                                                          \
        name, [](RunConfig& c, const std::string& v) { c.member = parse_number<std::int64_t>(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.member); }                              \
    }
#define MPR_DOUBLE(name, member)                                                             \
    Field {                                                                                  \
        name, [](RunConfig& c, const std::string& v) { c.member = parse_double(name, v); }, \
            [](const RunConfig& c) { return fmt(c.member); }                                 \
    }
#define MPR_STRING(name, member)                                                 \
    Field {                                                                      \
        name, [](RunConfig& c, const std::string& v) { c.member = v; },          \
            [](const RunConfig& c) { return c.member; }                          \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        MPR_STRING("pois", pois_path),
        MPR_STRING("checkins", checkins_path),
        MPR_STRING("searches", searches_path),
        MPR_STRING("users", users_path),
        MPR_STRING("bundle", bundle_dir),
        MPR_STRING("checkpoint", checkpoint_path),
        MPR_STRING("out", out_dir),
        Field{"seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>("seed", v); },
              [](const RunConfig& c) { return std::to_string(c.train.seed); }},
        MPR_DOUBLE("lambda1", train.lambda_attribute),
        MPR_DOUBLE("lambda2", train.lambda_interaction),
        MPR_DOUBLE("lambda_reg", train.lambda_reg),
        MPR_DOUBLE("gamma", train.gamma),
        MPR_DOUBLE("learning_rate", train.learning_rate),
        MPR_SIZE("epochs", train.epochs),
        MPR_SIZE("batch_size", train.batch_size),
        MPR_SIZE("negatives", train.negatives),
        MPR_SIZE("explicit_rank", train.explicit_rank),
        MPR_SIZE("implicit_rank", train.implicit_rank),
        MPR_SIZE("attention_hidden", train.attention_hidden),
        Field{"propagate", [](RunConfig& c, const std::string& v) { c.train.propagate = parse_bool("propagate", v); },
              [](const RunConfig& c) { return std::string(c.train.propagate ? "true" : "false"); }},
        MPR_SIZE("eval_k", train.eval_k),
        MPR_DOUBLE("adagrad_eps", train.adagrad_eps),
        MPR_INT("search_window", search_window),
        MPR_INT("visit_window", visit_window),
        MPR_SIZE("min_user_pois", min_user_pois),
        MPR_SIZE("min_poi_users", min_poi_users),
        MPR_INT("train_days", train_days),
        MPR_INT("test_days", test_days),
        MPR_SIZE("history_size", history_size),
        Field{"ks",
              [](RunConfig& c, const std::string& v) {
                  std::vector<std::size_t> ks;
                  std::stringstream ss(v);
                  std::string item;
                  while (std::getline(ss, item, ',')) ks.push_back(parse_number<std::size_t>("ks", trim(item)));
                  c.ks = ks;
              },
              [](const RunConfig& c) { return join(c.ks); }},
        MPR_SIZE("hint_k", hint_k),
        MPR_DOUBLE("hint_threshold", hint_threshold),
        MPR_SIZE("ablation_seeds", ablation_seeds),
    };
    return table;
}

#undef MPR_SIZE
#undef MPR_INT
#undef MPR_DOUBLE
#undef MPR_STRING

}  // namespace

void RunConfig::validate() const {
    train.validate();
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (search_window <= 0 || visit_window <= 0) bad("time windows must be positive");
    if (train_days <= 0 || test_days <= 0) bad("split windows must be positive");
    if (history_size == 0) bad("history_size must be positive");
    if (ks.empty()) bad("ks must list at least one cutoff");
    for (auto k : ks) {
        if (k == 0) bad("cutoffs must be positive");
    }
    if (hint_k == 0) bad("hint_k must be positive");
    if (ablation_seeds == 0) bad("ablation_seeds must be positive");
}

void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
}

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(n) + ": expected key = value");
        }
        set_run_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig read_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return parse_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
    for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

// ---------------------------------------------------------------------------

std::size_t PreparedData::user_row(const std::string& id) const {
    auto it = std::lower_bound(users.begin(), users.end(), id,
                               [](const UserProfile& u, const std::string& v) { return u.id < v; });
    if (it == users.end() || it->id != id) throw Error(ErrorKind::UnknownUser, id);
    return static_cast<std::size_t>(it - users.begin());
}

std::size_t PreparedData::poi_row(const std::string& id, std::size_t level) const {
    if (!tree.contains(id)) throw Error(ErrorKind::UnknownPoi, id);
    const NodeRef ref = tree.ref(id);
    if (ref.level != int(level) + 1) {
        throw Error(ErrorKind::LevelMismatch, id + " is on level " + std::to_string(ref.level));
    }
    return ref.index;
}

namespace {

std::vector<Visit> level_visits(const InteractionLog& log, const PoiTree& tree, int level,
                                const std::unordered_map<std::string, std::size_t>& user_rows) {
    std::vector<Visit> out;
    out.reserve(log.size());
    for (const auto& e : log) {
        const NodeRef ref = tree.ref(e.poi_id);
        if (ref.level != level) throw Error(ErrorKind::LevelMismatch, e.poi_id);
        out.emplace_back(user_rows.at(e.user_id), ref.index);
    }
    return out;
}

PositiveIndex positives(const std::vector<std::vector<Visit>>& visits, std::size_t users) {
    PositiveIndex idx = make_positive_index(visits.size(), users);
    for (std::size_t l = 0; l < visits.size(); ++l) {
        for (const auto& [u, p] : visits[l]) idx[l][u].push_back(p);
    }
    sort_positive_index(idx);
    return idx;
}

}  // namespace

PreparedData derive_dataset(PoiTree tree, std::vector<UserProfile> users, SearchLog searches, DatasetSplit split,
                            const RunConfig& cfg) {
    cfg.validate();
    const int levels = tree.levels();
    if (split.levels.size() != std::size_t(levels)) {
        throw Error(ErrorKind::DimensionMismatch, "split has " + std::to_string(split.levels.size()) +
                                                      " levels, tree has " + std::to_string(levels));
    }
    std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::unordered_map<std::string, std::size_t> user_rows;
    for (std::size_t i = 0; i < users.size(); ++i) user_rows.emplace(users[i].id, i);
    const std::size_t m = users.size();

    std::vector<std::vector<Visit>> train_visits, val_visits, test_visits;
    for (int l = 1; l <= levels; ++l) {
        const LevelSplit& s = split.levels[std::size_t(l - 1)];
        train_visits.push_back(level_visits(s.train, tree, l, user_rows));
        val_visits.push_back(level_visits(s.validation, tree, l, user_rows));
        test_visits.push_back(level_visits(s.test, tree, l, user_rows));
    }

    PreparedData out;
    // Explicit features. POI rules are compiled over every level so a column
    // names the same rule on every level.
    std::vector<AttributeProfile> user_attrs;
    for (const auto& u : users) user_attrs.push_back(u.attrs);
    std::vector<std::vector<AttributeProfile>> poi_attrs(static_cast<std::size_t>(levels));
    std::vector<AttributeProfile> all_poi_attrs;
    for (int l = 1; l <= levels; ++l) {
        for (const auto& id : tree.level_nodes(l)) {
            poi_attrs[std::size_t(l - 1)].push_back(poi_attributes(tree.node(id)));
            all_poi_attrs.push_back(poi_attrs[std::size_t(l - 1)].back());
        }
    }
    const auto user_rules = compile_rules(user_attrs);
    const auto poi_rules = compile_rules(all_poi_attrs);
    const auto user_vocab = attribute_vocabulary(user_attrs);
    const auto poi_vocab = attribute_vocabulary(all_poi_attrs);
    const Matrix x_direct = build_direct(user_attrs, user_rules, &user_vocab);
    std::vector<Matrix> y_direct;
    for (const auto& p : poi_attrs) y_direct.push_back(build_direct(p, poi_rules, &poi_vocab));

    // A user's inverse features pool visits from every level: stack the POI
    // rows and offset the visit indices.
    std::size_t total_pois = 0;
    for (const auto& y : y_direct) total_pois += y.rows();
    Matrix stacked(total_pois, poi_rules.size());
    std::vector<Visit> user_visits;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < y_direct.size(); ++l) {
        for (std::size_t r = 0; r < y_direct[l].rows(); ++r) {
            std::copy(y_direct[l].row(r).begin(), y_direct[l].row(r).end(), stacked.row(offset + r).begin());
        }
        for (const auto& [u, p] : train_visits[l]) user_visits.emplace_back(u, offset + p);
        offset += y_direct[l].rows();
    }
    const Matrix x_inverse = build_inverse_user(m, user_visits, stacked);
    std::vector<Matrix> y_inverse;
    for (std::size_t l = 0; l < y_direct.size(); ++l) {
        std::vector<Visit> pv;
        for (const auto& [u, p] : train_visits[l]) pv.emplace_back(p, u);
        y_inverse.push_back(build_inverse_poi(y_direct[l].rows(), pv, x_direct));
    }
    FeatureMatrices fm = assemble(x_direct, x_inverse, y_direct, y_inverse);
    fm.user_rules = user_rules;
    fm.poi_rules = poi_rules;

    // Context graphs see only training-window events.
    SearchLog train_searches;
    for (const auto& s : searches) {
        if (s.timestamp < split.train_end) train_searches.push_back(s);
    }
    GraphOptions gopt;
    gopt.search_window = cfg.search_window;
    gopt.visit_window = cfg.visit_window;
    std::vector<ContextGraph> graphs;
    for (int l = 1; l <= levels; ++l) {
        graphs.push_back(build_graph(train_searches, split.levels[std::size_t(l - 1)].train, tree, l, gopt));
    }

    out.training.x = fm.x;
    out.training.y = fm.y;
    out.training.links = TreeLinks::from_tree(tree);
    out.training.graphs = std::move(graphs);
    out.training.history = UserHistory::build(train_visits, m, cfg.history_size);
    out.training.train = positives(train_visits, m);
    out.validation = positives(val_visits, m);
    out.test = positives(test_visits, m);
    out.features = std::move(fm);
    out.tree = std::move(tree);
    out.users = std::move(users);
    out.searches = std::move(searches);
    out.split = std::move(split);
    return out;
}

PreparedData prepare_dataset(const PoiTree& tree, const InteractionLog& checkins, const SearchLog& searches,
                             const std::vector<UserProfile>& profiles, const RunConfig& cfg) {
    cfg.validate();
    const InteractionLog filtered = filter_sparse(checkins, cfg.min_user_pois, cfg.min_poi_users);

    // Keep POIs that still carry check-ins, plus their ancestors.
    std::set<std::string> keep;
    for (const auto& e : filtered) {
        keep.insert(e.poi_id);
        for (const auto& a : tree.ancestors(e.poi_id)) keep.insert(a);
    }
    std::vector<PoiNode> nodes;
    for (const auto& n : tree.profiles()) {
        if (keep.count(n.id) != 0) nodes.push_back(n);
    }
    PoiTree pruned = build_tree(std::move(nodes));
    if (pruned.levels() != tree.levels()) {
        throw Error(ErrorKind::EmptyAfterFilter, "filtering removed a whole tree level");
    }

    std::set<std::string> user_ids;
    for (const auto& e : filtered) user_ids.insert(e.user_id);
    std::map<std::string, AttributeProfile> by_id;
    for (const auto& u : profiles) by_id[u.id] = u.attrs;
    std::vector<UserProfile> users;
    for (const auto& id : user_ids) users.push_back({id, by_id.count(id) ? by_id[id] : AttributeProfile{}});

    SearchLog kept_searches;
    for (const auto& s : searches) {
        if (pruned.contains(s.poi_id) && user_ids.count(s.user_id) != 0) kept_searches.push_back(s);
    }

    const PerLevelLog logs = aggregate_upward(filtered, pruned);
    DatasetSplit split =
        split_chronological(logs, cfg.train_days * kSecondsPerDay, cfg.test_days * kSecondsPerDay);
    return derive_dataset(std::move(pruned), std::move(users), std::move(kept_searches), std::move(split), cfg);
}

// ---------------------------------------------------------------------------
// Bundle

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
    return out;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
    return in;
}

InteractionLog read_log(const fs::path& p) {
    auto in = open_in(p);
    return read_interactions(in, p.string());
}

void write_log(const fs::path& p, const InteractionLog& log) {
    auto out = open_out(p);
    write_interactions(out, log);
}

}  // namespace

void write_bundle(const PreparedData& data, const std::string& dir) {
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
    {
        auto out = open_out(root / "pois.jsonl");
        write_poi_profiles(out, data.tree.profiles());
    }
    {
        auto out = open_out(root / "users.jsonl");
        write_user_profiles(out, data.users);
    }
    write_log(root / "searches.csv", data.searches);
    const std::size_t levels = data.split.levels.size();
    for (std::size_t l = 0; l < levels; ++l) {
        const std::string stem = "level" + std::to_string(l + 1) + "_";
        write_log(root / (stem + "train.csv"), data.split.levels[l].train);
        write_log(root / (stem + "validation.csv"), data.split.levels[l].validation);
        write_log(root / (stem + "test.csv"), data.split.levels[l].test);
    }
    {
        nlohmann::json j;
        j["levels"] = levels;
        j["users"] = data.split.users;
        j["start"] = data.split.start;
        j["train_end"] = data.split.train_end;
        j["test_start"] = data.split.test_start;
        j["end"] = data.split.end;
        auto out = open_out(root / "split.json");
        out << j.dump(2) << '\n';
    }
    write_matrix_file((root / "X.mat").string(), data.features.x, {{"rows", "users"}});
    for (std::size_t l = 0; l < levels; ++l) {
        write_matrix_file((root / ("Y" + std::to_string(l + 1) + ".mat")).string(), data.features.y[l],
                          {{"rows", "pois"}, {"level", l + 1}});
        auto out = open_out(root / ("graph_level" + std::to_string(l + 1) + ".csv"));
        write_graph_csv(out, data.training.graphs[l]);
    }
    {
        nlohmann::json j;
        j["f_user"] = data.features.f_user;
        j["f_poi"] = data.features.f_poi;
        j["names"] = data.features.feature_names();
        auto out = open_out(root / "features.json");
        out << j.dump(2) << '\n';
    }
}

PreparedData load_bundle(const std::string& dir, const RunConfig& cfg) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw Error(ErrorKind::Io, "bundle directory " + dir + " not found");
    PoiTree tree = build_tree(read_poi_profiles_file((root / "pois.jsonl").string()));
    std::vector<UserProfile> users;
    {
        auto in = open_in(root / "users.jsonl");
        users = read_user_profiles(in);
    }
    SearchLog searches = read_log(root / "searches.csv");
    nlohmann::json j;
    {
        auto in = open_in(root / "split.json");
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ParseError, (root / "split.json").string() + ": " + e.what());
        }
    }
    DatasetSplit split;
    try {
        split.users = j.at("users").get<std::vector<std::string>>();
        split.start = j.at("start").get<std::int64_t>();
        split.train_end = j.at("train_end").get<std::int64_t>();
        split.test_start = j.at("test_start").get<std::int64_t>();
        split.end = j.at("end").get<std::int64_t>();
        split.levels.resize(j.at("levels").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, (root / "split.json").string() + ": " + e.what());
    }
    for (std::size_t l = 0; l < split.levels.size(); ++l) {
        const std::string stem = "level" + std::to_string(l + 1) + "_";
        split.levels[l].train = read_log(root / (stem + "train.csv"));
        split.levels[l].validation = read_log(root / (stem + "validation.csv"));
        split.levels[l].test = read_log(root / (stem + "test.csv"));
    }
    return derive_dataset(std::move(tree), std::move(users), std::move(searches), std::move(split), cfg);
}

}  // namespace mpr
