#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpr/context_graph.hpp"
#include "mpr/matrix.hpp"
#include "mpr/poi_tree.hpp"

namespace mpr {

// Model levels are 0-based here (0 = top of the tree, levels()-1 = leaves);
// PoiTree uses 1-based levels.
struct ModelDims {
    std::size_t users = 0;                      // m
    std::vector<std::size_t> pois;              // n_l per level
    std::size_t features = 0;                   // f
    std::size_t explicit_rank = 0;              // r
    std::vector<std::size_t> implicit_rank;     // r_l per level
    std::vector<std::size_t> attention_hidden;  // d_1 per non-leaf level, paired with r_{l+1}
    std::size_t history_size = 3;               // t
    double gamma = 1.0;
    bool propagate = true;  // inter-level attention block; off in the M1 ablation

    std::size_t levels() const noexcept { return pois.size(); }
    bool is_leaf(std::size_t level) const noexcept { return level + 1 == levels(); }
    bool has_inter_level(std::size_t level) const noexcept { return propagate && !is_leaf(level); }

    // Throws InvalidConfig on zero sizes or inconsistent vector lengths.
    void validate() const;

    // Uniform implicit rank on every level with d_1 = r_{l+1}.
    static ModelDims uniform(std::size_t users, std::vector<std::size_t> pois, std::size_t features,
                             std::size_t explicit_rank, std::size_t implicit_rank, std::size_t history_size = 3,
                             double gamma = 1.0);

    bool operator==(const ModelDims&) const = default;
};

struct AttentionParams {
    Matrix w1;  // d_1 x r_{l+1}
    Matrix b1;  // 1 x d_1
    Matrix d;   // 1 x d_1
    Matrix b2;  // 1 x 1

    bool operator==(const AttentionParams&) const = default;
};

struct TensorRef {
    std::string name;
    Matrix* tensor;
    bool active;  // false for the inter-level block when propagation is off
};

struct ConstTensorRef {
    std::string name;
    const Matrix* tensor;
    bool active;
};

struct ModelParams {
    ModelDims dims;
    Matrix user_explicit;                 // U_W, m x r
    std::vector<Matrix> poi_explicit;     // P_W^l, n_l x r
    Matrix shared_latent;                 // V, r x f
    std::vector<Matrix> user_implicit;    // H_u^l, m x r_l
    std::vector<Matrix> poi_implicit;     // H_p^l, n_l x r_l
    std::vector<Matrix> user_inter;       // A_u^l, m x r_{l+1}, non-leaf levels
    std::vector<AttentionParams> attention;  // non-leaf levels

    // Zero-filled tensors shaped by dims; also used for gradients and
    // optimizer state.
    static ModelParams zeros(const ModelDims& dims);

    // Declaration order: U_W, P_W^l, V, H_u^l, H_p^l, A_u^l, then
    // W_1, b_1, d, b_2 per non-leaf level.
    std::vector<TensorRef> tensors();
    std::vector<ConstTensorRef> tensors() const;

    std::size_t parameter_count() const;
    bool all_finite() const;

    bool operator==(const ModelParams&) const = default;
};

// Every entry uniform on [-0.01, 0.01] from a seeded generator, drawn in
// declaration order.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

// children[l][i]: rows at level l+1 under row i of level l.
struct TreeLinks {
    std::vector<std::vector<std::vector<std::size_t>>> children;

    static TreeLinks from_tree(const PoiTree& tree);
};

// Attention-propagated representation of one non-leaf level.
struct LevelPropagation {
    Matrix inter;                               // A_p^l, n_l x r_{l+1}
    std::vector<std::vector<double>> weights;   // softmax weights per parent, child order
    std::vector<std::vector<double>> logits;    // w_j = ReLU(d (W_1 h_j + b_1)) + b_2
};

// Throws LeafLevel for the leaf level. Parents without children get a zero row.
LevelPropagation attention_propagate(const ModelParams& params, const TreeLinks& links, std::size_t level);

// One entry per non-leaf level; empty entries when propagation is off.
std::vector<LevelPropagation> propagate_all(const ModelParams& params, const TreeLinks& links);

// Top-t most visited training POIs per level and user (ties to the lower row).
struct UserHistory {
    std::size_t t = 3;
    std::vector<std::vector<std::vector<std::size_t>>> top;  // [level][user] -> rows

    std::span<const std::size_t> at(std::size_t level, std::size_t user) const { return top[level][user]; }

    // visits[level] lists (user, row) once per training check-in.
    static UserHistory build(const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& visits,
                             std::size_t users, std::size_t t);
};

// O_F entry: <U_W[u] ⊕ H_u[u] ⊕ A_u[u], P_W[p] ⊕ H_p[p] ⊕ A_p[p]>, without
// the third block on the leaf level or when propagation is off.
double feature_score(const ModelParams& params, const std::vector<LevelPropagation>& prop, std::size_t user,
                     std::size_t poi, std::size_t level);

// μ = (1/|S|) Σ_{h in S} f_q(p,h) f_v(h->p) f_d(p,h) H_p[h]; zero for empty S.
std::vector<double> geo_influence(const ModelParams& params, const ContextGraph& graph,
                                  std::span<const std::size_t> history, std::size_t poi, std::size_t level);

// O_H entry: <H_u[u], μ>.
double historical_score(const ModelParams& params, const ContextGraph& graph, std::span<const std::size_t> history,
                        std::size_t user, std::size_t poi, std::size_t level);

struct Recommendation {
    std::size_t row;
    std::string poi_id;
    double score;
};

// Read-only scoring over frozen parameters. Propagation is computed once at
// construction; O_H is evaluated lazily per (user, candidate).
class Scorer {
public:
    Scorer(const ModelParams& params, const TreeLinks& links, const std::vector<ContextGraph>& graphs,
           const UserHistory& history);

    const ModelParams& params() const noexcept { return params_; }
    const std::vector<LevelPropagation>& propagation() const noexcept { return prop_; }

    double feature_score(std::size_t user, std::size_t poi, std::size_t level) const;
    double historical_score(std::size_t user, std::size_t poi, std::size_t level) const;
    // O = O_F + γ O_H with γ from the model dims unless overridden.
    double total_score(std::size_t user, std::size_t poi, std::size_t level) const;
    double total_score(std::size_t user, std::size_t poi, std::size_t level, double gamma) const;

    std::vector<double> score_all(std::size_t user, std::size_t level) const;

    // Descending score, ties to the lower row (= lexicographic id); rows in
    // `exclude` (sorted) are skipped.
    std::vector<Recommendation> recommend_topk(std::size_t user, std::size_t level, std::size_t k,
                                               std::span<const std::size_t> exclude,
                                               const std::vector<std::string>& ids) const;

private:
    const ModelParams& params_;
    const std::vector<ContextGraph>& graphs_;
    const UserHistory& history_;
    std::vector<LevelPropagation> prop_;
};

// Sort helper shared with evaluation: indices of `scores` by descending
// score, ties to the lower index, skipping `exclude` (sorted).
std::vector<std::size_t> rank_rows(std::span<const double> scores, std::span<const std::size_t> exclude,
                                   std::size_t k);

// Little-endian file: "MPRCKPT1", u32 format version, ModelDims header,
// row-major tensors in declaration order, trailing CRC-32.
constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);
// Also throws VersionMismatch when the stored dims differ from `expected`.
ModelParams load_checkpoint(const std::string& path, const ModelDims& expected);

}  // namespace mpr
