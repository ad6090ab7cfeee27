#include "mpr/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpr/error.hpp"
#include "mpr/eval.hpp"
#include "mpr/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <xmmintrin.h>
#define MPR_HAVE_MXCSR 1
#endif

namespace mpr {

void TrainConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (!(lambda_attribute >= 0.0) || !(lambda_interaction >= 0.0) || !(lambda_reg >= 0.0)) {
        bad("regularisation weights must be non-negative");
    }
    if (!std::isfinite(gamma)) bad("gamma must be finite");
    if (!(learning_rate > 0.0)) bad("learning rate must be positive");
    if (batch_size == 0) bad("batch size must be at least 1");
    if (negatives == 0) bad("need at least one negative per positive");
    if (explicit_rank == 0 || implicit_rank == 0) bad("ranks must be positive");
    if (eval_k == 0) bad("eval_k must be positive");
    if (!(adagrad_eps > 0.0)) bad("adagrad eps must be positive");
}

ModelDims make_dims(const TrainingData& data, const TrainConfig& cfg) {
    std::vector<std::size_t> pois;
    for (const auto& y : data.y) pois.push_back(y.rows());
    ModelDims d = ModelDims::uniform(data.users(), pois, data.x.cols(), cfg.explicit_rank, cfg.implicit_rank,
                                     data.history.t, cfg.gamma);
    if (cfg.attention_hidden != 0) std::fill(d.attention_hidden.begin(), d.attention_hidden.end(), cfg.attention_hidden);
    d.propagate = cfg.propagate;
    d.validate();
    return d;
}

namespace {

// −ln σ(s), stable for large |s|.
double neg_log_sigmoid(double s) { return s >= 0.0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s)); }

// σ(−s)
double sigmoid_neg(double s) { return 1.0 / (1.0 + std::exp(s)); }

void check_attribute_shapes(const ModelParams& params, const Matrix& x, const std::vector<Matrix>& y) {
    const ModelDims& d = params.dims;
    if (x.rows() != d.users || x.cols() != d.features || y.size() != d.levels()) {
        throw Error(ErrorKind::DimensionMismatch, "feature matrices do not match the model");
    }
    for (std::size_t l = 0; l < y.size(); ++l) {
        if (y[l].rows() != d.pois[l] || y[l].cols() != d.features) {
            throw Error(ErrorKind::DimensionMismatch, "Y at level " + std::to_string(l));
        }
    }
}

// Σ_rows ‖W_i V − T_i‖². With gradients, adds gcoef · ∂/∂W and ∂/∂V.
double reconstruct_rows(const Matrix& w, const Matrix& v, const Matrix& target, std::span<const std::size_t> rows,
                        double gcoef, Matrix* dw, Matrix* dv) {
    double loss = 0.0;
    std::vector<double> res(v.cols());
    for (std::size_t i : rows) {
        const auto wi = w.row(i);
        std::fill(res.begin(), res.end(), 0.0);
        for (std::size_t k = 0; k < v.rows(); ++k) simd::axpy(wi[k], v.row(k), res);
        const auto ti = target.row(i);
        for (std::size_t f = 0; f < res.size(); ++f) res[f] -= ti[f];
        loss += simd::dot(res, res);
        if (dw == nullptr) continue;
        auto dwi = dw->row(i);
        for (std::size_t k = 0; k < v.rows(); ++k) {
            dwi[k] += 2.0 * gcoef * simd::dot(v.row(k), res);
            simd::axpy(2.0 * gcoef * wi[k], res, dv->row(k));
        }
    }
    return loss;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

double score(const ModelParams& params, const TrainingData& data, const std::vector<LevelPropagation>& prop,
             std::size_t u, std::size_t p, std::size_t l) {
    double s = feature_score(params, prop, u, p, l);
    const double gamma = params.dims.gamma;
    if (gamma != 0.0) s += gamma * historical_score(params, data.graphs.at(l), data.history.at(l, u), u, p, l);
    return s;
}

// grad += c · ∂O(u,p,l)/∂θ, except that the propagated-row part is parked in
// d_inter[l] for the attention backward pass.
void backprop_score(const ModelParams& params, const TrainingData& data, const std::vector<LevelPropagation>& prop,
                    std::size_t u, std::size_t p, std::size_t l, double c, ModelParams& grad,
                    std::vector<Matrix>& d_inter) {
    simd::axpy(c, params.poi_explicit[l].row(p), grad.user_explicit.row(u));
    simd::axpy(c, params.user_explicit.row(u), grad.poi_explicit[l].row(p));
    simd::axpy(c, params.poi_implicit[l].row(p), grad.user_implicit[l].row(u));
    simd::axpy(c, params.user_implicit[l].row(u), grad.poi_implicit[l].row(p));
    if (params.dims.has_inter_level(l)) {
        simd::axpy(c, prop[l].inter.row(p), grad.user_inter[l].row(u));
        simd::axpy(c, params.user_inter[l].row(u), d_inter[l].row(p));
    }
    const double gamma = params.dims.gamma;
    if (gamma == 0.0) return;
    const auto hist = data.history.at(l, u);
    if (hist.empty()) return;
    const ContextGraph& graph = data.graphs.at(l);
    const auto mu = geo_influence(params, graph, hist, p, l);
    simd::axpy(c * gamma, mu, grad.user_implicit[l].row(u));
    const double inv = 1.0 / static_cast<double>(hist.size());
    for (std::size_t h : hist) {
        simd::axpy(c * gamma * inv * graph.influence(p, h), params.user_implicit[l].row(u),
                   grad.poi_implicit[l].row(h));
    }
}

// Chain rule from ∂L/∂A_p^l into H_p^{l+1} and the attention parameters.
void backprop_attention(const ModelParams& params, const TreeLinks& links, const LevelPropagation& prop,
                        std::size_t l, const Matrix& d_inter, ModelParams& grad) {
    const AttentionParams& att = params.attention[l];
    AttentionParams& gatt = grad.attention[l];
    const Matrix& child_emb = params.poi_implicit[l + 1];
    Matrix& d_child = grad.poi_implicit[l + 1];
    const std::size_t hidden = att.w1.rows();
    const auto& kids = links.children.at(l);
    std::vector<double> act(hidden);
    std::vector<double> dw;
    for (std::size_t parent = 0; parent < kids.size(); ++parent) {
        const auto& children = kids[parent];
        if (children.empty()) continue;
        const auto g = d_inter.row(parent);
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
        const auto& w = prop.weights[parent];
        dw.resize(children.size());
        double mean = 0.0;
        for (std::size_t j = 0; j < children.size(); ++j) {
            dw[j] = simd::dot(g, child_emb.row(children[j]));
            mean += w[j] * dw[j];
        }
        for (std::size_t j = 0; j < children.size(); ++j) {
            const auto h = child_emb.row(children[j]);
            auto dh = d_child.row(children[j]);
            simd::axpy(w[j], g, dh);
            const double dlogit = w[j] * (dw[j] - mean);
            gatt.b2(0, 0) += dlogit;
            for (std::size_t k = 0; k < hidden; ++k) act[k] = simd::dot(att.w1.row(k), h) + att.b1(0, k);
            const double z = simd::dot(att.d.row(0), act);
            if (!(z > 0.0)) continue;
            for (std::size_t k = 0; k < hidden; ++k) {
                const double da = dlogit * att.d(0, k);
                gatt.d(0, k) += dlogit * act[k];
                gatt.b1(0, k) += da;
                simd::axpy(da, h, gatt.w1.row(k));
                simd::axpy(da, att.w1.row(k), dh);
            }
        }
    }
}

// Which reconstruction rows the attribute term covers, and their weights.
struct AttributeScope {
    std::vector<std::size_t> users;
    double user_scale = 1.0;
    std::vector<std::vector<std::size_t>> pois;
    std::vector<double> poi_scale;
};

LossParts objective(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples,
                    const TrainConfig& cfg, const AttributeScope& scope, double rho, ModelParams* grad) {
    check_attribute_shapes(params, data.x, data.y);
    const ModelDims& dims = params.dims;
    if (grad != nullptr) {
        if (!(grad->dims == dims)) *grad = ModelParams::zeros(dims);
        for (auto& t : grad->tensors()) t.tensor->fill(0.0);
    }
    LossParts out;

    // Attribute reconstruction.
    const double ga = rho * cfg.lambda_attribute;
    double la = scope.user_scale * reconstruct_rows(params.user_explicit, params.shared_latent, data.x, scope.users,
                                                    ga * scope.user_scale, grad ? &grad->user_explicit : nullptr,
                                                    grad ? &grad->shared_latent : nullptr);
    for (std::size_t l = 0; l < dims.levels(); ++l) {
        const double s = scope.poi_scale[l];
        la += s * reconstruct_rows(params.poi_explicit[l], params.shared_latent, data.y[l], scope.pois[l], ga * s,
                                   grad ? &grad->poi_explicit[l] : nullptr, grad ? &grad->shared_latent : nullptr);
    }
    out.attribute = rho * la;

    // Pairwise ranking.
    const auto prop = propagate_all(params, data.links);
    std::vector<Matrix> d_inter;
    if (grad != nullptr) {
        for (std::size_t l = 0; l + 1 < dims.levels(); ++l) d_inter.emplace_back(dims.pois[l], dims.implicit_rank[l + 1]);
    }
    double li = 0.0;
    for (const auto& t : triples) {
        const double diff = score(params, data, prop, t.user, t.positive, t.level) -
                            score(params, data, prop, t.user, t.negative, t.level);
        li += neg_log_sigmoid(diff);
        if (grad == nullptr) continue;
        const double c = -cfg.lambda_interaction * sigmoid_neg(diff);
        backprop_score(params, data, prop, t.user, t.positive, t.level, c, *grad, d_inter);
        backprop_score(params, data, prop, t.user, t.negative, t.level, -c, *grad, d_inter);
    }
    out.interaction = li;
    if (grad != nullptr && dims.propagate) {
        for (std::size_t l = 0; l + 1 < dims.levels(); ++l) {
            backprop_attention(params, data.links, prop[l], l, d_inter[l], *grad);
        }
    }

    // Weight decay.
    out.regularization = rho * regularization(params);
    if (grad != nullptr && cfg.lambda_reg != 0.0) {
        auto g = grad->tensors();
        const auto p = params.tensors();
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!p[i].active) continue;
            simd::axpy(2.0 * rho * cfg.lambda_reg, p[i].tensor->values(), g[i].tensor->values());
        }
    }
    out.total = cfg.lambda_attribute * out.attribute + cfg.lambda_interaction * out.interaction +
                cfg.lambda_reg * out.regularization;
    return out;
}

}  // namespace

double attribute_loss(const ModelParams& params, const Matrix& x, const std::vector<Matrix>& y) {
    check_attribute_shapes(params, x, y);
    double loss = reconstruct_rows(params.user_explicit, params.shared_latent, x, all_rows(x.rows()), 0.0, nullptr,
                                   nullptr);
    for (std::size_t l = 0; l < y.size(); ++l) {
        loss += reconstruct_rows(params.poi_explicit[l], params.shared_latent, y[l], all_rows(y[l].rows()), 0.0,
                                 nullptr, nullptr);
    }
    return loss;
}

double interaction_loss(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples) {
    const auto prop = propagate_all(params, data.links);
    double loss = 0.0;
    for (const auto& t : triples) {
        loss += neg_log_sigmoid(score(params, data, prop, t.user, t.positive, t.level) -
                                score(params, data, prop, t.user, t.negative, t.level));
    }
    return loss;
}

double regularization(const ModelParams& params) {
    double s = 0.0;
    for (const auto& t : params.tensors()) {
        if (t.active) s += frobenius_squared(*t.tensor);
    }
    return s;
}

LossParts total_loss(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples,
                     const TrainConfig& cfg, ModelParams* grad) {
    AttributeScope scope;
    scope.users = all_rows(params.dims.users);
    for (std::size_t l = 0; l < params.dims.levels(); ++l) {
        scope.pois.push_back(all_rows(params.dims.pois[l]));
        scope.poi_scale.push_back(1.0);
    }
    return objective(params, data, triples, cfg, scope, 1.0, grad);
}

ModelParams gradients(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples,
                      const TrainConfig& cfg) {
    ModelParams grad = ModelParams::zeros(params.dims);
    total_loss(params, data, triples, cfg, &grad);
    return grad;
}

LossParts batch_loss(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> batch,
                     std::size_t epoch_triples, const TrainConfig& cfg, ModelParams* grad) {
    if (batch.empty()) throw Error(ErrorKind::InvalidConfig, "empty batch");
    if (epoch_triples < batch.size()) throw Error(ErrorKind::InvalidConfig, "batch larger than the epoch");
    const ModelDims& dims = params.dims;
    AttributeScope scope;
    scope.pois.resize(dims.levels());
    scope.poi_scale.assign(dims.levels(), 0.0);
    for (const auto& t : batch) {
        scope.users.push_back(t.user);
        scope.pois.at(t.level).push_back(t.positive);
        scope.pois[t.level].push_back(t.negative);
    }
    auto uniq = [](std::vector<std::size_t>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(scope.users);
    scope.user_scale = static_cast<double>(dims.users) / static_cast<double>(scope.users.size());
    for (std::size_t l = 0; l < dims.levels(); ++l) {
        uniq(scope.pois[l]);
        if (!scope.pois[l].empty()) {
            scope.poi_scale[l] = static_cast<double>(dims.pois[l]) / static_cast<double>(scope.pois[l].size());
        }
    }
    const double rho = static_cast<double>(batch.size()) / static_cast<double>(epoch_triples);
    return objective(params, data, batch, cfg, scope, rho, grad);
}

std::size_t sample_negative(std::span<const std::size_t> positives, std::size_t pois, std::mt19937_64& rng) {
    if (positives.size() >= pois) throw Error(ErrorKind::NoNegativeAvailable, "user visited every POI on the level");
    const std::size_t free = pois - positives.size();
    if (positives.size() * 2 <= pois) {
        std::uniform_int_distribution<std::size_t> pick(0, pois - 1);
        for (;;) {
            const std::size_t p = pick(rng);
            if (!std::binary_search(positives.begin(), positives.end(), p)) return p;
        }
    }
    // Dense history: index straight into the complement.
    std::size_t target = std::uniform_int_distribution<std::size_t>(0, free - 1)(rng);
    std::size_t next = 0;
    for (std::size_t p = 0; p < pois; ++p) {
        if (next < positives.size() && positives[next] == p) {
            ++next;
            continue;
        }
        if (target-- == 0) return p;
    }
    throw Error(ErrorKind::NoNegativeAvailable, "positives are not sorted");
}

std::vector<TrainTriple> make_triples(const TrainingData& data, std::size_t negatives, std::mt19937_64& rng) {
    std::vector<TrainTriple> out;
    for (std::size_t l = 0; l < data.levels(); ++l) {
        const std::size_t n = data.pois(l);
        for (std::size_t u = 0; u < data.users(); ++u) {
            const auto& pos = data.train.at(l).at(u);
            if (pos.empty() || pos.size() >= n) continue;
            for (std::size_t p : pos) {
                for (std::size_t k = 0; k < negatives; ++k) out.push_back({u, p, sample_negative(pos, n, rng), l});
            }
        }
    }
    return out;
}

void adagrad_step(ModelParams& params, const ModelParams& grads, ModelParams& accumulator, double lr, double eps) {
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto a = accumulator.tensors();
    if (g.size() != p.size() || a.size() != p.size()) throw Error(ErrorKind::DimensionMismatch, "adagrad state");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].active) continue;
        if (g[i].tensor->size() != p[i].tensor->size() || a[i].tensor->size() != p[i].tensor->size()) {
            throw Error(ErrorKind::DimensionMismatch, "adagrad tensor " + p[i].name);
        }
        simd::adagrad_update(p[i].tensor->values(), g[i].tensor->values(), a[i].tensor->values(), lr, eps);
    }
}

namespace {

// Weight decay drives untouched coordinates geometrically toward zero; once
// they go subnormal every multiply on them takes a slow microcode path.
// Training flushes them to zero and restores the caller's mode afterwards.
class FlushSubnormals {
public:
    FlushSubnormals() {
#ifdef MPR_HAVE_MXCSR
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u);  // FTZ | DAZ
#endif
    }
    ~FlushSubnormals() {
#ifdef MPR_HAVE_MXCSR
        _mm_setcsr(saved_);
#endif
    }
    FlushSubnormals(const FlushSubnormals&) = delete;
    FlushSubnormals& operator=(const FlushSubnormals&) = delete;

private:
    unsigned saved_ = 0;
};

}  // namespace

TrainResult train(const TrainingData& data, const PositiveIndex& validation, const TrainConfig& cfg) {
    cfg.validate();
    const FlushSubnormals flush;
    const ModelDims dims = make_dims(data, cfg);
    TrainResult result;
    ModelParams params = init_params(dims, cfg.seed);
    result.params = params;
    if (cfg.epochs == 0) return result;

    bool has_validation = false;
    for (const auto& level : validation) {
        for (const auto& rows : level) has_validation = has_validation || !rows.empty();
    }

    std::seed_seq seq{cfg.seed, std::uint64_t{0x5eed}};
    std::mt19937_64 rng(seq);
    ModelParams grad = ModelParams::zeros(dims);
    ModelParams acc = ModelParams::zeros(dims);
    const std::size_t ks[] = {cfg.eval_k};
    double best = -std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto triples = make_triples(data, cfg.negatives, rng);
        if (triples.empty()) throw Error(ErrorKind::InvalidConfig, "no training triples");
        std::shuffle(triples.begin(), triples.end(), rng);

        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t start = 0; start < triples.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, triples.size() - start);
            const std::span<const TrainTriple> batch(triples.data() + start, len);
            const LossParts parts = batch_loss(params, data, batch, triples.size(), cfg, &grad);
            adagrad_step(params, grad, acc, cfg.learning_rate, cfg.adagrad_eps);
            rec.total_loss += parts.total;
            rec.attribute_loss += parts.attribute;
            rec.interaction_loss += parts.interaction;
        }
        if (!params.all_finite() || !std::isfinite(rec.total_loss)) {
            throw Error(ErrorKind::Diverged, "non-finite parameters after epoch " + std::to_string(epoch));
        }
        if (has_validation) {
            const MetricTable val = evaluate(params, data, validation, ks);
            rec.val_precision = val.mean_precision(cfg.eval_k);
            rec.val_ndcg = val.mean_ndcg(cfg.eval_k);
        }
        result.history.push_back(rec);
        if (!has_validation || rec.val_precision > best) {
            best = rec.val_precision;
            result.params = params;
            result.best_epoch = epoch;
        }
    }
    return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history, std::size_t k) {
    out << "epoch,total_loss,L_A,L_I,val_P@" << k << ",val_NDCG@" << k << '\n';
    const auto old = out.precision(12);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.total_loss << ',' << r.attribute_loss << ',' << r.interaction_loss << ','
            << r.val_precision << ',' << r.val_ndcg << '\n';
    }
    out.precision(old);
}

}  // namespace mpr
