#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mpr/eval.hpp"
#include "mpr/training.hpp"

namespace mpr {

enum class Variant {
    M1,  // no propagation, γ = 0
    M2,  // propagation, γ = 0
    M3,  // full model
};

const char* variant_name(Variant v);

// `base` with the variant's switches applied.
TrainConfig variant_config(const TrainConfig& base, Variant v);

struct AblationRun {
    Variant variant;
    std::uint64_t seed;
    MetricTable metrics;  // on the evaluation index
};

struct AblationResult {
    std::vector<AblationRun> runs;  // seed-major, M1/M2/M3 per seed

    // Mean and sample standard deviation over seeds of NDCG@k or P@k.
    double mean(Variant v, std::size_t level, std::size_t k, bool ndcg = true) const;
    double stddev(Variant v, std::size_t level, std::size_t k, bool ndcg = true) const;
};

// Trains each variant once per seed and evaluates on `relevant`.
AblationResult ablation(const TrainingData& data, const PositiveIndex& validation, const PositiveIndex& relevant,
                        const TrainConfig& base, std::span<const std::uint64_t> seeds, std::span<const std::size_t> ks);

// CSV "level,model,metric,k,mean,stddev,seeds".
void write_ablation_summary(std::ostream& out, const AblationResult& result, std::size_t levels,
                            std::span<const std::size_t> ks);

}  // namespace mpr
