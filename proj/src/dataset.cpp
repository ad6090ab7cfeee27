#include "mpr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mpr/error.hpp"
#include "mpr/geo.hpp"

namespace mpr {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return in;
}

struct PairHash {
    std::size_t operator()(const std::pair<std::string, std::string>& p) const {
        return std::hash<std::string>()(p.first) * 1000003u ^ std::hash<std::string>()(p.second);
    }
};

}  // namespace

AttributeProfile poi_attributes(const PoiNode& node) {
    AttributeProfile out;
    for (const auto& a : node.attrs) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) {
            out.categorical.emplace("tag", a);
            continue;
        }
        const std::string key = a.substr(0, eq);
        const std::string value = a.substr(eq + 1);
        double v = 0.0;
        if (parse_double(value, v)) {
            out.numeric[key] = v;
        } else {
            out.categorical.emplace(key, value);
        }
    }
    return out;
}

InteractionLog read_interactions(std::istream& in, const std::string& source) {
    InteractionLog out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cols = split_commas(line);
        if (!header_seen) {
            if (cols.size() != 3 || cols[0] != "user_id" || cols[1] != "poi_id" || cols[2] != "timestamp") {
                throw Error(ErrorKind::ParseError,
                            source + " line " + std::to_string(line_no) + ": expected header user_id,poi_id,timestamp");
            }
            header_seen = true;
            continue;
        }
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
            throw Error(ErrorKind::ParseError, source + " line " + std::to_string(line_no) + ": expected 3 fields");
        }
        std::int64_t ts = 0;
        const auto& t = cols[2];
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), ts);
        if (ec != std::errc() || ptr != t.data() + t.size() || ts < 0) {
            throw Error(ErrorKind::ParseError, source + " line " + std::to_string(line_no) + ": bad timestamp '" + t + "'");
        }
        out.push_back({cols[0], cols[1], ts});
    }
    return out;
}

void write_interactions(std::ostream& out, const InteractionLog& log) {
    out << "user_id,poi_id,timestamp\n";
    for (const auto& e : log) out << e.user_id << ',' << e.poi_id << ',' << e.timestamp << '\n';
}

std::vector<UserProfile> read_user_profiles(std::istream& in) {
    std::vector<UserProfile> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            UserProfile u;
            u.id = j.at("user_id").get<std::string>();
            if (j.contains("attrs")) {
                for (const auto& [key, v] : j.at("attrs").items()) {
                    if (v.is_number()) {
                        u.attrs.numeric[key] = v.get<double>();
                    } else if (v.is_string()) {
                        u.attrs.categorical.emplace(key, v.get<std::string>());
                    } else if (v.is_boolean()) {
                        u.attrs.categorical.emplace(key, v.get<bool>() ? "true" : "false");
                    } else if (v.is_array()) {
                        for (const auto& e : v) u.attrs.categorical.emplace(key, e.get<std::string>());
                    } else if (!v.is_null()) {
                        throw Error(ErrorKind::ParseError, "user profile line " + std::to_string(line_no) +
                                                               ": unsupported value for " + key);
                    }
                }
            }
            out.push_back(std::move(u));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ParseError, "user profile line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_user_profiles(std::ostream& out, const std::vector<UserProfile>& users) {
    for (const auto& u : users) {
        nlohmann::json attrs = nlohmann::json::object();
        for (const auto& [k, v] : u.attrs.numeric) attrs[k] = v;
        std::map<std::string, std::vector<std::string>> cats;
        for (const auto& [k, v] : u.attrs.categorical) cats[k].push_back(v);
        for (const auto& [k, vs] : cats) {
            if (vs.size() == 1) {
                attrs[k] = vs.front();
            } else {
                attrs[k] = vs;
            }
        }
        nlohmann::json j;
        j["user_id"] = u.id;
        j["attrs"] = attrs;
        out << j.dump() << '\n';
    }
}

IngestResult ingest(const std::string& checkin_path, const std::string& search_path,
                    const std::string& user_profile_path, const PoiTree& tree,
                    const IngestOptions& options) {
    IngestResult result;
    {
        auto in = open_input(user_profile_path);
        result.users = read_user_profiles(in);
    }
    std::unordered_set<std::string> known_users;
    for (const auto& u : result.users) known_users.insert(u.id);

    auto resolve = [&](InteractionLog raw, std::size_t& skipped) {
        InteractionLog kept;
        kept.reserve(raw.size());
        for (auto& e : raw) {
            if (!tree.contains(e.poi_id)) {
                if (options.strict) throw Error(ErrorKind::UnknownPoi, e.poi_id);
                ++skipped;
                continue;
            }
            if (known_users.count(e.user_id) == 0) {
                if (options.strict) throw Error(ErrorKind::UnknownUser, e.user_id);
                ++skipped;
                continue;
            }
            kept.push_back(std::move(e));
        }
        return kept;
    };
    {
        auto in = open_input(checkin_path);
        result.checkins = resolve(read_interactions(in, checkin_path), result.skipped_checkins);
    }
    {
        auto in = open_input(search_path);
        result.searches = resolve(read_interactions(in, search_path), result.skipped_searches);
    }
    return result;
}

PerLevelLog aggregate_upward(const InteractionLog& log, const PoiTree& tree) {
    PerLevelLog out(static_cast<std::size_t>(tree.levels()));
    for (const auto& e : log) {
        const PoiNode* cur = &tree.node(e.poi_id);
        while (true) {
            out[static_cast<std::size_t>(cur->level - 1)].push_back({e.user_id, cur->id, e.timestamp});
            if (!cur->parent_id) break;
            cur = &tree.node(*cur->parent_id);
        }
    }
    for (auto& lv : out) std::sort(lv.begin(), lv.end(), [](const CheckIn& a, const CheckIn& b) {
        return std::tie(a.timestamp, a.user_id, a.poi_id) < std::tie(b.timestamp, b.user_id, b.poi_id);
    });
    return out;
}

InteractionLog filter_sparse(const InteractionLog& log, std::size_t min_user_pois,
                             std::size_t min_poi_users) {
    InteractionLog cur = log;
    while (true) {
        std::unordered_set<std::pair<std::string, std::string>, PairHash> pairs;
        for (const auto& e : cur) pairs.emplace(e.user_id, e.poi_id);
        std::unordered_map<std::string, std::size_t> user_pois;
        std::unordered_map<std::string, std::size_t> poi_users;
        for (const auto& [u, p] : pairs) {
            ++user_pois[u];
            ++poi_users[p];
        }
        InteractionLog next;
        next.reserve(cur.size());
        for (const auto& e : cur) {
            if (user_pois[e.user_id] >= min_user_pois && poi_users[e.poi_id] >= min_poi_users) {
                next.push_back(e);
            }
        }
        if (next.size() == cur.size()) break;
        cur = std::move(next);
    }
    if (cur.empty() && !log.empty()) {
        throw Error(ErrorKind::EmptyAfterFilter, "no interactions survive the sparsity filter");
    }
    return cur;
}

PerLevelLog filter_sparse(const PerLevelLog& logs, std::size_t min_user_pois, std::size_t min_poi_users) {
    PerLevelLog out;
    out.reserve(logs.size());
    for (std::size_t l = 0; l < logs.size(); ++l) {
        try {
            out.push_back(filter_sparse(logs[l], min_user_pois, min_poi_users));
        } catch (const Error& e) {
            throw Error(ErrorKind::EmptyAfterFilter, "level " + std::to_string(l + 1) + " is empty after filtering");
        }
    }
    return out;
}

DatasetSplit split_chronological(const PerLevelLog& logs, std::int64_t train_window_seconds,
                                 std::int64_t test_window_seconds) {
    if (train_window_seconds <= 0 || test_window_seconds <= 0) {
        throw Error(ErrorKind::InvalidConfig, "split windows must be positive");
    }
    bool any = false;
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    std::set<std::string> users;
    for (const auto& lv : logs) {
        for (const auto& e : lv) {
            if (!any) {
                lo = hi = e.timestamp;
                any = true;
            }
            lo = std::min(lo, e.timestamp);
            hi = std::max(hi, e.timestamp);
            users.insert(e.user_id);
        }
    }
    if (!any || hi - lo <= train_window_seconds + test_window_seconds) {
        throw Error(ErrorKind::WindowTooLarge,
                    "log spans " + std::to_string(any ? hi - lo : 0) + " s, windows need more than " +
                        std::to_string(train_window_seconds + test_window_seconds) + " s");
    }

    DatasetSplit split;
    split.start = lo;
    split.end = hi;
    split.train_end = lo + train_window_seconds;
    split.test_start = hi - test_window_seconds;
    split.users.assign(users.begin(), users.end());
    split.levels.resize(logs.size());
    for (std::size_t l = 0; l < logs.size(); ++l) {
        LevelSplit& out = split.levels[l];
        std::unordered_set<std::pair<std::string, std::string>, PairHash> seen;
        for (const auto& e : logs[l]) {
            if (e.timestamp < split.train_end) {
                out.train.push_back(e);
                seen.emplace(e.user_id, e.poi_id);
            }
        }
        for (const auto& e : logs[l]) {
            if (e.timestamp < split.train_end || seen.count({e.user_id, e.poi_id}) != 0) continue;
            if (e.timestamp > split.test_start) {
                out.test.push_back(e);
            } else {
                out.validation.push_back(e);
            }
        }
    }
    return split;
}

std::string check_split(const DatasetSplit& split) {
    for (std::size_t l = 0; l < split.levels.size(); ++l) {
        const auto& lv = split.levels[l];
        const std::string where = "level " + std::to_string(l + 1) + ": ";
        std::int64_t train_max = std::numeric_limits<std::int64_t>::min();
        std::int64_t val_min = std::numeric_limits<std::int64_t>::max();
        std::int64_t val_max = std::numeric_limits<std::int64_t>::min();
        std::int64_t test_min = std::numeric_limits<std::int64_t>::max();
        std::unordered_set<std::pair<std::string, std::string>, PairHash> train_pairs;
        for (const auto& e : lv.train) {
            train_max = std::max(train_max, e.timestamp);
            train_pairs.emplace(e.user_id, e.poi_id);
        }
        for (const auto& e : lv.validation) {
            val_min = std::min(val_min, e.timestamp);
            val_max = std::max(val_max, e.timestamp);
            if (train_pairs.count({e.user_id, e.poi_id})) return where + "train pair in validation";
        }
        for (const auto& e : lv.test) {
            test_min = std::min(test_min, e.timestamp);
            if (train_pairs.count({e.user_id, e.poi_id})) return where + "train pair in test";
        }
        if (!lv.validation.empty() && train_max >= val_min) return where + "validation precedes train";
        if (!lv.test.empty() && train_max >= test_min) return where + "test precedes train";
        if (!lv.validation.empty() && !lv.test.empty() && val_max >= test_min) {
            return where + "test precedes validation";
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Synthetic data

SynthConfig parse_synth_config(std::istream& in) {
    SynthConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    auto to_size = [&](const std::string& key, const std::string& v) {
        double d = 0.0;
        if (!parse_double(v, d) || d < 0 || d != std::floor(d)) {
            throw Error(ErrorKind::InvalidConfig, key + " must be a non-negative integer, got '" + v + "'");
        }
        return static_cast<std::size_t>(d);
    };
    auto to_double = [&](const std::string& key, const std::string& v) {
        double d = 0.0;
        if (!parse_double(v, d)) throw Error(ErrorKind::InvalidConfig, key + " must be numeric, got '" + v + "'");
        return d;
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "users") cfg.users = to_size(key, value);
        else if (key == "level_sizes") {
            cfg.level_sizes.clear();
            for (const auto& part : split_commas(value)) cfg.level_sizes.push_back(to_size(key, part));
        }
        else if (key == "latent_dim") cfg.latent_dim = to_size(key, value);
        else if (key == "noise") cfg.noise = to_double(key, value);
        else if (key == "temperature") cfg.temperature = to_double(key, value);
        else if (key == "child_spread") cfg.child_spread = to_double(key, value);
        else if (key == "sessions_per_user") cfg.sessions_per_user = to_size(key, value);
        else if (key == "session_continue") cfg.session_continue = to_double(key, value);
        else if (key == "max_session_length") cfg.max_session_length = to_size(key, value);
        else if (key == "companions") cfg.companions = to_size(key, value);
        else if (key == "search_rate") cfg.search_rate = to_double(key, value);
        else if (key == "alt_search_rate") cfg.alt_search_rate = to_double(key, value);
        else if (key == "days") cfg.days = to_size(key, value);
        else if (key == "center_lat") cfg.center_lat = to_double(key, value);
        else if (key == "center_lon") cfg.center_lon = to_double(key, value);
        else if (key == "top_radius_m") cfg.top_radius_m = to_double(key, value);
        else if (key == "poi_tag_threshold") cfg.poi_tag_threshold = to_double(key, value);
        else if (key == "start_timestamp") cfg.start_timestamp = static_cast<std::int64_t>(to_size(key, value));
        else throw Error(ErrorKind::InvalidConfig, "unknown synth key '" + key + "'");
    }
    return cfg;
}

SynthConfig read_synth_config_file(const std::string& path) {
    auto in = open_input(path);
    return parse_synth_config(in);
}

void write_synth_config(std::ostream& out, const SynthConfig& cfg) {
    std::ostringstream sizes;
    for (std::size_t i = 0; i < cfg.level_sizes.size(); ++i) sizes << (i ? "," : "") << cfg.level_sizes[i];
    auto fmt = [](double v) {
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    };
    out << "users = " << cfg.users << '\n'
        << "level_sizes = " << sizes.str() << '\n'
        << "latent_dim = " << cfg.latent_dim << '\n'
        << "noise = " << fmt(cfg.noise) << '\n'
        << "temperature = " << fmt(cfg.temperature) << '\n'
        << "child_spread = " << fmt(cfg.child_spread) << '\n'
        << "sessions_per_user = " << cfg.sessions_per_user << '\n'
        << "session_continue = " << fmt(cfg.session_continue) << '\n'
        << "max_session_length = " << cfg.max_session_length << '\n'
        << "companions = " << cfg.companions << '\n'
        << "search_rate = " << fmt(cfg.search_rate) << '\n'
        << "alt_search_rate = " << fmt(cfg.alt_search_rate) << '\n'
        << "days = " << cfg.days << '\n'
        << "center_lat = " << fmt(cfg.center_lat) << '\n'
        << "center_lon = " << fmt(cfg.center_lon) << '\n'
        << "top_radius_m = " << fmt(cfg.top_radius_m) << '\n'
        << "poi_tag_threshold = " << fmt(cfg.poi_tag_threshold) << '\n'
        << "start_timestamp = " << cfg.start_timestamp << '\n';
}

namespace {

void validate(const SynthConfig& cfg) {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (cfg.users == 0) bad("users must be positive");
    if (cfg.level_sizes.empty()) bad("level_sizes must not be empty");
    for (auto n : cfg.level_sizes) {
        if (n == 0) bad("every level size must be positive");
    }
    if (cfg.latent_dim == 0) bad("latent_dim must be positive");
    if (cfg.sessions_per_user == 0) bad("sessions_per_user must be positive");
    if (cfg.max_session_length == 0) bad("max_session_length must be positive");
    if (cfg.days == 0) bad("days must be positive");
    if (!(cfg.temperature > 0)) bad("temperature must be positive");
    if (!(cfg.top_radius_m > 0)) bad("top_radius_m must be positive");
    for (double p : {cfg.noise, cfg.session_continue, cfg.search_rate, cfg.alt_search_rate}) {
        if (!(p >= 0.0 && p <= 1.0)) bad("rates must lie in [0,1]");
    }
}

std::string make_id(char prefix, std::size_t level, std::size_t index) {
    char buf[32];
    if (level == 0) {
        std::snprintf(buf, sizeof buf, "%c%05zu", prefix, index);
    } else {
        std::snprintf(buf, sizeof buf, "%c%zu_%05zu", prefix, level, index);
    }
    return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t dim = cfg.latent_dim;
    const std::size_t levels = cfg.level_sizes.size();

    SyntheticData data;
    std::vector<std::vector<std::vector<double>>> latent(levels);
    std::vector<std::vector<std::size_t>> parent_of(levels);
    const LocalProjection proj{cfg.center_lat, cfg.center_lon};

    auto place = [&](double cx, double cy, double radius) {
        const double r = radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        return std::pair{cx + r * std::cos(theta), cy + r * std::sin(theta)};
    };

    std::vector<std::vector<std::pair<double, double>>> xy(levels);
    double radius = cfg.top_radius_m;
    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t n = cfg.level_sizes[l];
        latent[l].resize(n);
        xy[l].resize(n);
        parent_of[l].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> z(dim);
            if (l == 0) {
                for (auto& v : z) v = gauss(rng);
                xy[l][i] = place(0.0, 0.0, radius);
            } else {
                const std::size_t n_parent = cfg.level_sizes[l - 1];
                const std::size_t parent = i < n_parent ? i : static_cast<std::size_t>(rng() % n_parent);
                parent_of[l][i] = parent;
                for (std::size_t k = 0; k < dim; ++k) z[k] = latent[l - 1][parent][k] + cfg.child_spread * gauss(rng);
                xy[l][i] = place(xy[l - 1][parent].first, xy[l - 1][parent].second, radius);
            }
            latent[l][i] = std::move(z);
        }
        radius /= 3.0;
    }

    for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t i = 0; i < cfg.level_sizes[l]; ++i) {
            PoiNode node;
            node.id = make_id('p', l + 1, i);
            if (l > 0) node.parent_id = make_id('p', l, parent_of[l][i]);
            const auto [lat, lon] = proj.unproject(xy[l][i].first, xy[l][i].second);
            node.lat = std::round(lat * 1e7) / 1e7;
            node.lon = std::round(lon * 1e7) / 1e7;
            for (std::size_t k = 0; k < dim; ++k) {
                if (latent[l][i][k] > cfg.poi_tag_threshold) node.attrs.insert("t" + std::to_string(k));
            }
            data.pois.push_back(std::move(node));
        }
    }

    // Check-ins land on the deepest level.
    const std::size_t leaf_level = levels - 1;
    const std::size_t n_leaf = cfg.level_sizes[leaf_level];
    const auto& leaf_xy = xy[leaf_level];
    std::vector<std::vector<std::size_t>> companions(n_leaf);
    const std::size_t n_comp = std::min(cfg.companions, n_leaf - 1);
    for (std::size_t i = 0; i < n_leaf; ++i) {
        std::vector<std::pair<double, std::size_t>> by_dist;
        for (std::size_t j = 0; j < n_leaf; ++j) {
            if (j == i) continue;
            by_dist.emplace_back(std::hypot(leaf_xy[i].first - leaf_xy[j].first,
                                            leaf_xy[i].second - leaf_xy[j].second), j);
        }
        std::partial_sort(by_dist.begin(), by_dist.begin() + static_cast<long>(n_comp), by_dist.end());
        for (std::size_t c = 0; c < n_comp; ++c) companions[i].push_back(by_dist[c].second);
    }

    const double scale = 1.0 / (std::sqrt(static_cast<double>(dim)) * cfg.temperature);
    const std::int64_t horizon = static_cast<std::int64_t>(cfg.days) * kSecondsPerDay;
    std::uniform_int_distribution<std::int64_t> start_time(0, horizon - 4 * 3600);
    std::uniform_int_distribution<std::int64_t> hop(300, 1500);
    std::uniform_int_distribution<std::int64_t> lead(60, 1200);
    std::uniform_int_distribution<std::size_t> any_leaf(0, n_leaf - 1);

    for (std::size_t u = 0; u < cfg.users; ++u) {
        std::vector<double> z(dim);
        for (auto& v : z) v = gauss(rng);
        const std::string uid = make_id('u', 0, u);

        UserProfile profile;
        profile.id = uid;
        std::size_t best = 0;
        for (std::size_t k = 0; k < dim; ++k) {
            profile.attrs.numeric["a" + std::to_string(k)] = std::round(z[k] * 100.0) / 100.0;
            if (z[k] > z[best]) best = k;
        }
        profile.attrs.categorical.emplace("segment", "s" + std::to_string(best));
        data.users.push_back(std::move(profile));

        std::vector<double> weights(n_leaf);
        double max_logit = -1e300;
        for (std::size_t p = 0; p < n_leaf; ++p) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += z[k] * latent[leaf_level][p][k];
            weights[p] = s * scale;
            max_logit = std::max(max_logit, weights[p]);
        }
        for (auto& w : weights) w = std::exp(w - max_logit);
        std::discrete_distribution<std::size_t> prefer(weights.begin(), weights.end());

        for (std::size_t s = 0; s < cfg.sessions_per_user; ++s) {
            std::int64_t t = cfg.start_timestamp + start_time(rng);
            std::size_t leaf = unit(rng) < cfg.noise ? any_leaf(rng) : prefer(rng);
            for (std::size_t step = 0; step < cfg.max_session_length; ++step) {
                const std::string pid = make_id('p', levels, leaf);
                if (unit(rng) < cfg.search_rate) {
                    const std::int64_t ts = t - lead(rng);
                    data.searches.push_back({uid, pid, ts});
                    if (n_comp > 0 && unit(rng) < cfg.alt_search_rate) {
                        const std::size_t alt = companions[leaf][rng() % n_comp];
                        data.searches.push_back({uid, make_id('p', levels, alt), ts + 30});
                    }
                }
                data.checkins.push_back({uid, pid, t});
                if (n_comp == 0 || step + 1 == cfg.max_session_length || unit(rng) >= cfg.session_continue) break;
                leaf = companions[leaf][rng() % n_comp];
                t += hop(rng);
            }
        }
    }

    auto by_time = [](const Interaction& a, const Interaction& b) {
        return std::tie(a.timestamp, a.user_id, a.poi_id) < std::tie(b.timestamp, b.user_id, b.poi_id);
    };
    std::sort(data.checkins.begin(), data.checkins.end(), by_time);
    std::sort(data.searches.begin(), data.searches.end(), by_time);
    return data;
}

}  // namespace mpr
