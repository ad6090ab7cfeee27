#include "mpr/ablation.hpp"

#include <cmath>

#include "mpr/error.hpp"

namespace mpr {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::M1: return "M1";
        case Variant::M2: return "M2";
        case Variant::M3: return "M3";
    }
    return "?";
}

TrainConfig variant_config(const TrainConfig& base, Variant v) {
    TrainConfig cfg = base;
    if (v == Variant::M1) {
        cfg.propagate = false;
        cfg.gamma = 0.0;
    } else if (v == Variant::M2) {
        cfg.propagate = true;
        cfg.gamma = 0.0;
    } else {
        cfg.propagate = true;
    }
    return cfg;
}

namespace {

std::vector<double> samples(const AblationResult& r, Variant v, std::size_t level, std::size_t k, bool ndcg) {
    std::vector<double> out;
    for (const auto& run : r.runs) {
        if (run.variant != v) continue;
        const auto& cell = run.metrics.levels.at(level).at_k.at(k);
        out.push_back(ndcg ? cell.ndcg : cell.precision);
    }
    return out;
}

}  // namespace

double AblationResult::mean(Variant v, std::size_t level, std::size_t k, bool ndcg) const {
    const auto s = samples(*this, v, level, k, ndcg);
    if (s.empty()) return 0.0;
    double sum = 0.0;
    for (double x : s) sum += x;
    return sum / double(s.size());
}

double AblationResult::stddev(Variant v, std::size_t level, std::size_t k, bool ndcg) const {
    const auto s = samples(*this, v, level, k, ndcg);
    if (s.size() < 2) return 0.0;
    const double mu = mean(v, level, k, ndcg);
    double ss = 0.0;
    for (double x : s) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / double(s.size() - 1));
}

AblationResult ablation(const TrainingData& data, const PositiveIndex& validation, const PositiveIndex& relevant,
                        const TrainConfig& base, std::span<const std::uint64_t> seeds,
                        std::span<const std::size_t> ks) {
    if (seeds.empty()) throw Error(ErrorKind::InvalidConfig, "ablation needs at least one seed");
    AblationResult out;
    for (std::uint64_t seed : seeds) {
        for (Variant v : {Variant::M1, Variant::M2, Variant::M3}) {
            TrainConfig cfg = variant_config(base, v);
            cfg.seed = seed;
            const TrainResult tr = train(data, validation, cfg);
            out.runs.push_back({v, seed, evaluate(tr.params, data, relevant, ks)});
        }
    }
    return out;
}

void write_ablation_summary(std::ostream& out, const AblationResult& result, std::size_t levels,
                            std::span<const std::size_t> ks) {
    out << "level,model,metric,k,mean,stddev,seeds\n";
    const auto old = out.precision(10);
    std::size_t seeds = 0;
    for (const auto& r : result.runs) seeds += r.variant == Variant::M1 ? 1 : 0;
    for (std::size_t l = 0; l < levels; ++l) {
        for (bool ndcg : {false, true}) {
            for (Variant v : {Variant::M1, Variant::M2, Variant::M3}) {
                for (std::size_t k : ks) {
                    out << l + 1 << ',' << variant_name(v) << ',' << (ndcg ? "NDCG" : "P") << ',' << k << ','
                        << result.mean(v, l, k, ndcg) << ',' << result.stddev(v, l, k, ndcg) << ',' << seeds << '\n';
                }
            }
        }
    }
    out.precision(old);
}

}  // namespace mpr
