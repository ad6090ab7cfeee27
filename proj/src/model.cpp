#include "mpr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/crc.hpp>

#include "binary_io.hpp"
#include "mpr/error.hpp"
#include "mpr/simd/kernels.hpp"

namespace mpr {

void ModelDims::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, "model dims: " + what); };
    if (users == 0) bad("no users");
    if (pois.empty()) bad("no levels");
    if (features == 0) bad("no features");
    if (explicit_rank == 0) bad("explicit rank must be positive");
    if (implicit_rank.size() != pois.size()) bad("one implicit rank per level required");
    if (attention_hidden.size() + 1 != pois.size()) bad("one attention size per non-leaf level required");
    for (auto n : pois) {
        if (n == 0) bad("empty level");
    }
    for (auto r : implicit_rank) {
        if (r == 0) bad("implicit rank must be positive");
    }
    for (auto d : attention_hidden) {
        if (d == 0) bad("attention size must be positive");
    }
    if (history_size == 0) bad("history size must be positive");
    if (!std::isfinite(gamma)) bad("gamma must be finite");
}

ModelDims ModelDims::uniform(std::size_t users, std::vector<std::size_t> pois, std::size_t features,
                             std::size_t explicit_rank, std::size_t implicit_rank, std::size_t history_size,
                             double gamma) {
    ModelDims d;
    d.users = users;
    d.features = features;
    d.explicit_rank = explicit_rank;
    d.implicit_rank.assign(pois.size(), implicit_rank);
    if (!pois.empty()) d.attention_hidden.assign(pois.size() - 1, implicit_rank);
    d.pois = std::move(pois);
    d.history_size = history_size;
    d.gamma = gamma;
    return d;
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
    dims.validate();
    ModelParams p;
    p.dims = dims;
    const std::size_t levels = dims.levels();
    p.user_explicit = Matrix(dims.users, dims.explicit_rank);
    for (std::size_t l = 0; l < levels; ++l) p.poi_explicit.emplace_back(dims.pois[l], dims.explicit_rank);
    p.shared_latent = Matrix(dims.explicit_rank, dims.features);
    for (std::size_t l = 0; l < levels; ++l) p.user_implicit.emplace_back(dims.users, dims.implicit_rank[l]);
    for (std::size_t l = 0; l < levels; ++l) p.poi_implicit.emplace_back(dims.pois[l], dims.implicit_rank[l]);
    for (std::size_t l = 0; l + 1 < levels; ++l) p.user_inter.emplace_back(dims.users, dims.implicit_rank[l + 1]);
    for (std::size_t l = 0; l + 1 < levels; ++l) {
        const std::size_t hidden = dims.attention_hidden[l];
        p.attention.push_back(AttentionParams{Matrix(hidden, dims.implicit_rank[l + 1]), Matrix(1, hidden),
                                              Matrix(1, hidden), Matrix(1, 1)});
    }
    return p;
}

namespace {

template <typename Params, typename Ref>
std::vector<Ref> collect_tensors(Params& p) {
    std::vector<Ref> out;
    const std::size_t levels = p.dims.levels();
    const bool inter = p.dims.propagate;
    out.push_back({"user_explicit", &p.user_explicit, true});
    for (std::size_t l = 0; l < levels; ++l) out.push_back({"poi_explicit." + std::to_string(l), &p.poi_explicit[l], true});
    out.push_back({"shared_latent", &p.shared_latent, true});
    for (std::size_t l = 0; l < levels; ++l) out.push_back({"user_implicit." + std::to_string(l), &p.user_implicit[l], true});
    for (std::size_t l = 0; l < levels; ++l) out.push_back({"poi_implicit." + std::to_string(l), &p.poi_implicit[l], true});
    for (std::size_t l = 0; l + 1 < levels; ++l) out.push_back({"user_inter." + std::to_string(l), &p.user_inter[l], inter});
    for (std::size_t l = 0; l + 1 < levels; ++l) {
        const std::string s = std::to_string(l);
        out.push_back({"attention_w1." + s, &p.attention[l].w1, inter});
        out.push_back({"attention_b1." + s, &p.attention[l].b1, inter});
        out.push_back({"attention_d." + s, &p.attention[l].d, inter});
        out.push_back({"attention_b2." + s, &p.attention[l].b2, inter});
    }
    return out;
}

}  // namespace

std::vector<TensorRef> ModelParams::tensors() { return collect_tensors<ModelParams, TensorRef>(*this); }

std::vector<ConstTensorRef> ModelParams::tensors() const {
    return collect_tensors<const ModelParams, ConstTensorRef>(*this);
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.tensor->size();
    return n;
}

bool ModelParams::all_finite() const {
    for (const auto& t : tensors()) {
        for (double v : t.tensor->values()) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(dims);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.01, 0.01);
    for (auto& t : p.tensors()) {
        for (double& v : t.tensor->values()) v = dist(rng);
    }
    return p;
}

TreeLinks TreeLinks::from_tree(const PoiTree& tree) {
    TreeLinks links;
    for (int l = 1; l <= tree.levels(); ++l) links.children.push_back(tree.child_rows(l));
    return links;
}

LevelPropagation attention_propagate(const ModelParams& params, const TreeLinks& links, std::size_t level) {
    const ModelDims& dims = params.dims;
    if (level >= dims.levels()) throw Error(ErrorKind::IndexOutOfRange, "level " + std::to_string(level));
    if (dims.is_leaf(level)) throw Error(ErrorKind::LeafLevel, "level " + std::to_string(level) + " has no children");
    const AttentionParams& att = params.attention[level];
    const Matrix& child_emb = params.poi_implicit[level + 1];
    const std::size_t hidden = att.w1.rows();
    const auto& kids = links.children.at(level);

    LevelPropagation out;
    out.inter = Matrix(dims.pois[level], child_emb.cols());
    out.weights.resize(dims.pois[level]);
    out.logits.resize(dims.pois[level]);
    std::vector<double> act(hidden);
    for (std::size_t parent = 0; parent < kids.size(); ++parent) {
        const auto& children = kids[parent];
        if (children.empty()) continue;
        auto& logits = out.logits[parent];
        logits.resize(children.size());
        for (std::size_t j = 0; j < children.size(); ++j) {
            const auto h = child_emb.row(children[j]);
            for (std::size_t k = 0; k < hidden; ++k) act[k] = simd::dot(att.w1.row(k), h) + att.b1(0, k);
            const double z = simd::dot(att.d.row(0), act);
            logits[j] = std::max(z, 0.0) + att.b2(0, 0);
        }
        const double top = *std::max_element(logits.begin(), logits.end());
        auto& w = out.weights[parent];
        w.resize(children.size());
        double norm = 0.0;
        for (std::size_t j = 0; j < children.size(); ++j) {
            w[j] = std::exp(logits[j] - top);
            norm += w[j];
        }
        auto dst = out.inter.row(parent);
        for (std::size_t j = 0; j < children.size(); ++j) {
            w[j] /= norm;
            simd::axpy(w[j], child_emb.row(children[j]), dst);
        }
    }
    return out;
}

std::vector<LevelPropagation> propagate_all(const ModelParams& params, const TreeLinks& links) {
    std::vector<LevelPropagation> out(params.dims.levels() > 0 ? params.dims.levels() - 1 : 0);
    if (!params.dims.propagate) return out;
    for (std::size_t l = 0; l < out.size(); ++l) out[l] = attention_propagate(params, links, l);
    return out;
}

UserHistory UserHistory::build(const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& visits,
                               std::size_t users, std::size_t t) {
    UserHistory h;
    h.t = t;
    h.top.resize(visits.size());
    for (std::size_t l = 0; l < visits.size(); ++l) {
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> counts(users);  // (row, count)
        std::vector<std::pair<std::size_t, std::size_t>> sorted = visits[l];
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [u, row] : sorted) {
            auto& c = counts.at(u);
            if (!c.empty() && c.back().first == row) {
                ++c.back().second;
            } else {
                c.emplace_back(row, 1);
            }
        }
        h.top[l].resize(users);
        for (std::size_t u = 0; u < users; ++u) {
            auto& c = counts[u];
            std::stable_sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
            for (std::size_t i = 0; i < c.size() && i < t; ++i) h.top[l][u].push_back(c[i].first);
        }
    }
    return h;
}

namespace {

void check_indices(const ModelParams& params, std::size_t user, std::size_t poi, std::size_t level) {
    const ModelDims& d = params.dims;
    if (level >= d.levels() || user >= d.users || poi >= d.pois[level]) {
        throw Error(ErrorKind::IndexOutOfRange, "user " + std::to_string(user) + ", poi " + std::to_string(poi) +
                                                    ", level " + std::to_string(level));
    }
}

}  // namespace

double feature_score(const ModelParams& params, const std::vector<LevelPropagation>& prop, std::size_t user,
                     std::size_t poi, std::size_t level) {
    check_indices(params, user, poi, level);
    double s = simd::dot(params.user_explicit.row(user), params.poi_explicit[level].row(poi));
    s += simd::dot(params.user_implicit[level].row(user), params.poi_implicit[level].row(poi));
    if (params.dims.has_inter_level(level)) {
        s += simd::dot(params.user_inter[level].row(user), prop.at(level).inter.row(poi));
    }
    return s;
}

std::vector<double> geo_influence(const ModelParams& params, const ContextGraph& graph,
                                  std::span<const std::size_t> history, std::size_t poi, std::size_t level) {
    const Matrix& emb = params.poi_implicit.at(level);
    std::vector<double> mu(emb.cols(), 0.0);
    if (history.empty()) return mu;
    const double inv = 1.0 / static_cast<double>(history.size());
    for (std::size_t h : history) simd::axpy(inv * graph.influence(poi, h), emb.row(h), mu);
    return mu;
}

double historical_score(const ModelParams& params, const ContextGraph& graph, std::span<const std::size_t> history,
                        std::size_t user, std::size_t poi, std::size_t level) {
    check_indices(params, user, poi, level);
    const auto mu = geo_influence(params, graph, history, poi, level);
    return simd::dot(params.user_implicit[level].row(user), mu);
}

Scorer::Scorer(const ModelParams& params, const TreeLinks& links, const std::vector<ContextGraph>& graphs,
               const UserHistory& history)
    : params_(params), graphs_(graphs), history_(history), prop_(propagate_all(params, links)) {}

double Scorer::feature_score(std::size_t user, std::size_t poi, std::size_t level) const {
    return mpr::feature_score(params_, prop_, user, poi, level);
}

double Scorer::historical_score(std::size_t user, std::size_t poi, std::size_t level) const {
    return mpr::historical_score(params_, graphs_.at(level), history_.at(level, user), user, poi, level);
}

double Scorer::total_score(std::size_t user, std::size_t poi, std::size_t level) const {
    return total_score(user, poi, level, params_.dims.gamma);
}

double Scorer::total_score(std::size_t user, std::size_t poi, std::size_t level, double gamma) const {
    const double f = feature_score(user, poi, level);
    if (gamma == 0.0) return f;
    return f + gamma * historical_score(user, poi, level);
}

std::vector<double> Scorer::score_all(std::size_t user, std::size_t level) const {
    const std::size_t n = params_.dims.pois.at(level);
    std::vector<double> out(n);
    const double gamma = params_.dims.gamma;
    // <H_u[u], H_p[h]> is shared by every candidate, so O_H reduces to a
    // weighted sum of these dots.
    std::vector<double> hist_dot;
    std::span<const std::size_t> hist;
    if (gamma != 0.0) {
        hist = history_.at(level, user);
        for (std::size_t h : hist) {
            hist_dot.push_back(simd::dot(params_.user_implicit[level].row(user), params_.poi_implicit[level].row(h)));
        }
    }
    const ContextGraph* graph = gamma != 0.0 ? &graphs_.at(level) : nullptr;
    for (std::size_t p = 0; p < n; ++p) {
        double s = feature_score(user, p, level);
        if (graph != nullptr && !hist.empty()) {
            double o_h = 0.0;
            for (std::size_t i = 0; i < hist.size(); ++i) o_h += graph->influence(p, hist[i]) * hist_dot[i];
            s += gamma * o_h / static_cast<double>(hist.size());
        }
        out[p] = s;
    }
    return out;
}

std::vector<std::size_t> rank_rows(std::span<const double> scores, std::span<const std::size_t> exclude,
                                   std::size_t k) {
    std::vector<std::size_t> rows;
    rows.reserve(scores.size());
    for (std::size_t p = 0; p < scores.size(); ++p) {
        if (!std::binary_search(exclude.begin(), exclude.end(), p)) rows.push_back(p);
    }
    auto better = [&](std::size_t a, std::size_t b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
    const std::size_t take = std::min(k, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<long>(take), rows.end(), better);
    rows.resize(take);
    return rows;
}

std::vector<Recommendation> Scorer::recommend_topk(std::size_t user, std::size_t level, std::size_t k,
                                                   std::span<const std::size_t> exclude,
                                                   const std::vector<std::string>& ids) const {
    const auto scores = score_all(user, level);
    std::vector<Recommendation> out;
    for (std::size_t row : rank_rows(scores, exclude, k)) out.push_back({row, ids.at(row), scores[row]});
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr char kCheckpointMagic[] = "MPRCKPT1";

std::uint32_t crc32(const std::string& bytes, std::size_t n) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), n);
    return crc.checksum();
}

void put_dims(std::string& buf, const ModelDims& d) {
    detail::put_u64(buf, d.users);
    detail::put_u64(buf, d.levels());
    for (auto n : d.pois) detail::put_u64(buf, n);
    detail::put_u64(buf, d.features);
    detail::put_u64(buf, d.explicit_rank);
    for (auto r : d.implicit_rank) detail::put_u64(buf, r);
    for (auto h : d.attention_hidden) detail::put_u64(buf, h);
    detail::put_u64(buf, d.history_size);
    detail::put_f64(buf, d.gamma);
    detail::put_u32(buf, d.propagate ? 1u : 0u);
}

ModelDims get_dims(detail::Reader& rd) {
    ModelDims d;
    d.users = rd.u64();
    const std::uint64_t levels = rd.u64();
    if (!rd.ok() || levels == 0 || levels > 64) throw Error(ErrorKind::CorruptCheckpoint, "bad level count");
    for (std::uint64_t l = 0; l < levels; ++l) d.pois.push_back(rd.u64());
    d.features = rd.u64();
    d.explicit_rank = rd.u64();
    for (std::uint64_t l = 0; l < levels; ++l) d.implicit_rank.push_back(rd.u64());
    for (std::uint64_t l = 0; l + 1 < levels; ++l) d.attention_hidden.push_back(rd.u64());
    d.history_size = rd.u64();
    d.gamma = rd.f64();
    d.propagate = rd.u32() != 0;
    if (!rd.ok()) throw Error(ErrorKind::CorruptCheckpoint, "truncated header");
    return d;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::string buf(kCheckpointMagic, 8);
    detail::put_u32(buf, kCheckpointVersion);
    put_dims(buf, params.dims);
    for (const auto& t : params.tensors()) {
        detail::put_u64(buf, t.tensor->rows());
        detail::put_u64(buf, t.tensor->cols());
        for (double v : t.tensor->values()) detail::put_f64(buf, v);
    }
    detail::put_u32(buf, crc32(buf, buf.size()));
    detail::write_file_bytes(path, buf);
}

ModelParams load_checkpoint(const std::string& path) {
    const std::string buf = detail::read_file_bytes(path);
    auto corrupt = [&](const std::string& why) { throw Error(ErrorKind::CorruptCheckpoint, path + ": " + why); };
    if (buf.size() < 8 + 4 + 4 || buf.compare(0, 8, kCheckpointMagic, 8) != 0) corrupt("bad magic or too short");
    detail::Reader tail(buf, buf.size());
    tail.bytes(buf.size() - 4);
    if (tail.u32() != crc32(buf, buf.size() - 4)) corrupt("checksum mismatch");

    detail::Reader rd(buf, buf.size() - 4);
    rd.bytes(8);
    const std::uint32_t version = rd.u32();
    if (version != kCheckpointVersion) {
        throw Error(ErrorKind::VersionMismatch, "checkpoint format " + std::to_string(version) + ", expected " +
                                                    std::to_string(kCheckpointVersion));
    }
    const ModelDims dims = get_dims(rd);
    ModelParams params;
    try {
        params = ModelParams::zeros(dims);
    } catch (const Error& e) {
        corrupt(e.what());
    }
    for (auto& t : params.tensors()) {
        const auto rows = rd.u64();
        const auto cols = rd.u64();
        if (!rd.ok() || rows != t.tensor->rows() || cols != t.tensor->cols()) corrupt("tensor " + t.name + " shape");
        for (double& v : t.tensor->values()) v = rd.f64();
    }
    if (!rd.ok()) corrupt("truncated tensors");
    if (rd.remaining() != 0) corrupt("trailing bytes");
    return params;
}

ModelParams load_checkpoint(const std::string& path, const ModelDims& expected) {
    ModelParams params = load_checkpoint(path);
    if (!(params.dims.users == expected.users && params.dims.pois == expected.pois &&
          params.dims.features == expected.features)) {
        throw Error(ErrorKind::VersionMismatch, path + ": checkpoint shape does not match the current dataset");
    }
    return params;
}

}  // namespace mpr
