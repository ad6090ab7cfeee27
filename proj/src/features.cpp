#include "mpr/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "mpr/error.hpp"

namespace mpr {

namespace {

// Linear-interpolated quantile of sorted values (q = 0.5 gives the median).
double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

constexpr char kMatrixMagic[] = "MPRMAT01";

}  // namespace

bool DecisionRule::matches(const AttributeProfile& profile) const {
    switch (polarity) {
        case Polarity::Less:
        case Polarity::GreaterEqual: {
            auto it = profile.numeric.find(attribute);
            if (it == profile.numeric.end()) return false;
            return polarity == Polarity::Less ? it->second < threshold : it->second >= threshold;
        }
        case Polarity::Equal:
            return profile.categorical.count({attribute, category}) != 0;
        case Polarity::NotEqual: {
            auto it = profile.categorical.lower_bound({attribute, std::string()});
            const bool has_key = it != profile.categorical.end() && it->first == attribute;
            return has_key && profile.categorical.count({attribute, category}) == 0;
        }
    }
    return false;
}

std::string DecisionRule::name() const {
    switch (polarity) {
        case Polarity::Less: return attribute + "<" + format_number(threshold);
        case Polarity::GreaterEqual: return attribute + ">=" + format_number(threshold);
        case Polarity::Equal: return attribute + "=" + category;
        case Polarity::NotEqual: return attribute + "!=" + category;
    }
    return attribute;
}

std::vector<DecisionRule> compile_rules(std::span<const AttributeProfile> profiles, const RuleOptions& options) {
    std::map<std::string, std::vector<double>> numeric;
    std::map<std::pair<std::string, std::string>, std::size_t> support;
    for (const auto& p : profiles) {
        for (const auto& [k, v] : p.numeric) numeric[k].push_back(v);
        for (const auto& kv : p.categorical) ++support[kv];
    }

    std::map<std::string, std::vector<DecisionRule>> by_attr;
    for (auto& [key, values] : numeric) {
        std::sort(values.begin(), values.end());
        std::vector<double> thresholds;
        for (double q : options.quantiles) thresholds.push_back(quantile_sorted(values, std::clamp(q, 0.0, 1.0)));
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        for (double t : thresholds) {
            by_attr[key].push_back({key, RuleKind::Numeric, t, {}, Polarity::Less});
            by_attr[key].push_back({key, RuleKind::Numeric, t, {}, Polarity::GreaterEqual});
        }
    }
    for (const auto& [kv, count] : support) {
        if (count < options.min_category_support) continue;
        by_attr[kv.first].push_back({kv.first, RuleKind::Categorical, 0.0, kv.second, Polarity::Equal});
    }

    std::vector<DecisionRule> rules;
    for (auto& [key, list] : by_attr) std::move(list.begin(), list.end(), std::back_inserter(rules));
    return rules;
}

std::set<std::string> attribute_vocabulary(std::span<const AttributeProfile> profiles) {
    std::set<std::string> vocab;
    for (const auto& p : profiles) {
        for (const auto& [k, v] : p.numeric) vocab.insert(k);
        for (const auto& [k, v] : p.categorical) vocab.insert(k);
    }
    return vocab;
}

Matrix build_direct(std::span<const AttributeProfile> profiles, std::span<const DecisionRule> rules,
                    const std::set<std::string>* vocabulary) {
    std::set<std::string> own;
    if (vocabulary == nullptr) {
        own = attribute_vocabulary(profiles);
        vocabulary = &own;
    }
    for (const auto& r : rules) {
        if (vocabulary->count(r.attribute) == 0) throw Error(ErrorKind::UnknownAttribute, r.attribute);
    }
    Matrix out(profiles.size(), rules.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        for (std::size_t k = 0; k < rules.size(); ++k) {
            if (rules[k].matches(profiles[i])) out(i, k) = 1.0;
        }
    }
    return out;
}

Matrix normalize_inverse_counts(const Matrix& counts) {
    Matrix out(counts.rows(), counts.cols());
    for (std::size_t i = 0; i < counts.rows(); ++i) {
        double lo = 0.0;
        double hi = 0.0;
        bool touched = false;
        for (double c : counts.row(i)) {
            if (c <= 0.0) continue;
            lo = touched ? std::min(lo, c) : c;
            hi = touched ? std::max(hi, c) : c;
            touched = true;
        }
        if (!touched) continue;
        for (std::size_t k = 0; k < counts.cols(); ++k) {
            const double c = counts(i, k);
            if (c <= 0.0) continue;
            out(i, k) = hi == lo ? 1.0 : (c - lo) / (hi - lo);
        }
    }
    return out;
}

namespace {

Matrix count_visits(std::size_t rows, std::span<const Visit> visits, const Matrix& other) {
    Matrix counts(rows, other.cols());
    for (const auto& [row, o] : visits) {
        if (row >= rows || o >= other.rows()) throw Error(ErrorKind::IndexOutOfRange, "visit outside matrix");
        auto dst = counts.row(row);
        auto src = other.row(o);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    return counts;
}

}  // namespace

Matrix build_inverse_user(std::size_t users, std::span<const Visit> visits, const Matrix& poi_direct) {
    return normalize_inverse_counts(count_visits(users, visits, poi_direct));
}

Matrix build_inverse_poi(std::size_t pois, std::span<const Visit> visits, const Matrix& user_direct) {
    return normalize_inverse_counts(count_visits(pois, visits, user_direct));
}

std::vector<std::string> FeatureMatrices::feature_names() const {
    std::vector<std::string> out;
    for (const auto& r : user_rules) out.push_back("user:" + r.name());
    for (const auto& r : poi_rules) out.push_back("poi:" + r.name());
    // Callers may assemble without rules; fall back to positional names.
    for (std::size_t k = out.size(); k < f(); ++k) out.push_back("f" + std::to_string(k));
    return out;
}

FeatureMatrices assemble(const Matrix& x_direct, const Matrix& x_inverse, const std::vector<Matrix>& y_direct,
                         const std::vector<Matrix>& y_inverse) {
    auto mismatch = [](const std::string& what) { throw Error(ErrorKind::DimensionMismatch, what); };
    if (x_direct.rows() != x_inverse.rows()) mismatch("user direct and inverse row counts differ");
    if (y_direct.size() != y_inverse.size()) mismatch("level counts differ");
    FeatureMatrices fm;
    fm.f_user = x_direct.cols();
    fm.f_poi = x_inverse.cols();
    fm.x = hconcat(x_direct, x_inverse);
    for (std::size_t l = 0; l < y_direct.size(); ++l) {
        const std::string lv = " at level " + std::to_string(l + 1);
        if (y_direct[l].rows() != y_inverse[l].rows()) mismatch("POI direct and inverse row counts differ" + lv);
        if (y_direct[l].cols() != fm.f_poi) mismatch("POI direct columns differ from f_p" + lv);
        if (y_inverse[l].cols() != fm.f_user) mismatch("POI inverse columns differ from f_u" + lv);
        fm.y.push_back(hconcat(y_inverse[l], y_direct[l]));
    }
    return fm;
}

void write_matrix_file(const std::string& path, const Matrix& m, nlohmann::json header) {
    if (header.is_null()) header = nlohmann::json::object();
    header["rows"] = m.rows();
    header["cols"] = m.cols();
    const std::string h = header.dump();
    std::string buf(kMatrixMagic, 8);
    detail::put_u64(buf, h.size());
    buf += h;
    buf.reserve(buf.size() + 8 * m.size());
    for (double v : m.values()) detail::put_f64(buf, v);
    detail::write_file_bytes(path, buf);
}

std::pair<Matrix, nlohmann::json> read_matrix_file(const std::string& path) {
    const std::string buf = detail::read_file_bytes(path);
    detail::Reader rd(buf, buf.size());
    auto corrupt = [&](const std::string& why) { throw Error(ErrorKind::ParseError, path + ": " + why); };
    if (rd.bytes(8) != std::string(kMatrixMagic, 8)) corrupt("not a matrix container");
    const std::uint64_t hlen = rd.u64();
    const std::string h = rd.bytes(hlen);
    if (!rd.ok()) corrupt("truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(h);
    } catch (const nlohmann::json::exception& e) {
        corrupt(e.what());
    }
    const auto rows = header.at("rows").get<std::size_t>();
    const auto cols = header.at("cols").get<std::size_t>();
    if (rd.remaining() != rows * cols * 8) corrupt("payload size does not match header");
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rd.f64();
    return {std::move(m), std::move(header)};
}

}  // namespace mpr
