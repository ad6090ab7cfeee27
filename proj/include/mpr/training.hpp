#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "mpr/model.hpp"
#include "mpr/training_data.hpp"

namespace mpr {

struct TrainConfig {
    double lambda_attribute = 0.01;    // λ1
    double lambda_interaction = 0.1;   // λ2
    double lambda_reg = 1.0;           // λ_Θ
    double gamma = 1.0;
    double learning_rate = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    std::size_t negatives = 1;  // per positive
    std::uint64_t seed = 42;

    // Model shape. attention_hidden = 0 means d_1 = r_{l+1}.
    std::size_t explicit_rank = 32;
    std::size_t implicit_rank = 150;
    std::size_t attention_hidden = 0;
    bool propagate = true;

    std::size_t eval_k = 10;
    double adagrad_eps = 1e-8;

    void validate() const;
};

struct TrainTriple {
    std::size_t user;
    std::size_t positive;
    std::size_t negative;
    std::size_t level;

    bool operator==(const TrainTriple&) const = default;
};

// Dims for `data` under `cfg`; history size comes from data.history.
ModelDims make_dims(const TrainingData& data, const TrainConfig& cfg);

// ‖U_W V − X‖² + Σ_l ‖P_W^l V − Y^l‖².
double attribute_loss(const ModelParams& params, const Matrix& x, const std::vector<Matrix>& y);

// −Σ ln σ(O(u,p⁺) − O(u,p⁻)), with γ taken from params.dims.
double interaction_loss(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples);

// ‖Θ‖² over the active tensors.
double regularization(const ModelParams& params);

struct LossParts {
    double total = 0.0;
    double attribute = 0.0;       // L_A, unweighted
    double interaction = 0.0;     // L_I, unweighted
    double regularization = 0.0;  // ‖Θ‖², unweighted
};

// λ1 L_A + λ2 L_I + λ_Θ ‖Θ‖² over every row and the given triples. When
// `grad` is non-null it receives the exact gradient (it must be shaped like
// params; it is overwritten).
LossParts total_loss(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples,
                     const TrainConfig& cfg, ModelParams* grad = nullptr);

ModelParams gradients(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> triples,
                      const TrainConfig& cfg);

// Mini-batch objective. With ρ = |batch| / epoch_triples:
//   ρ λ1 L̂_A + λ2 L_I(batch) + ρ λ_Θ ‖Θ‖²
// where L̂_A only reconstructs the user and POI rows the batch touches,
// rescaled by m/|U_b| and n_l/|P_b^l|. Summed over an epoch this is an
// unbiased estimate of total_loss.
LossParts batch_loss(const ModelParams& params, const TrainingData& data, std::span<const TrainTriple> batch,
                     std::size_t epoch_triples, const TrainConfig& cfg, ModelParams* grad = nullptr);

// Uniform over the level's rows not in `positives` (sorted). Throws
// NoNegativeAvailable when the user has visited every POI.
std::size_t sample_negative(std::span<const std::size_t> positives, std::size_t pois, std::mt19937_64& rng);

// One triple per (training positive, negative draw) on every level. Positives
// of users who visited the whole level are skipped.
std::vector<TrainTriple> make_triples(const TrainingData& data, std::size_t negatives, std::mt19937_64& rng);

// acc += g²; θ −= lr g / (√acc + eps), on active tensors only.
void adagrad_step(ModelParams& params, const ModelParams& grads, ModelParams& accumulator, double lr,
                  double eps = 1e-8);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double total_loss = 0.0;
    double attribute_loss = 0.0;
    double interaction_loss = 0.0;
    double val_precision = 0.0;
    double val_ndcg = 0.0;
};

struct TrainResult {
    ModelParams params;  // best validation P@k; initial params when epochs = 0
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;  // 0 when no epoch ran
};

// Shuffled mini-batches mixing every level, propagation recomputed from the
// live parameters for each batch, Adagrad updates. Each epoch is scored on
// `validation` (may be empty) and the best P@eval_k parameters are kept.
TrainResult train(const TrainingData& data, const PositiveIndex& validation, const TrainConfig& cfg);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history, std::size_t k = 10);

}  // namespace mpr
