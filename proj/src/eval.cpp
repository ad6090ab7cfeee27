#include "mpr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "mpr/error.hpp"

namespace mpr {

PositiveIndex make_positive_index(std::size_t levels, std::size_t users) {
    return PositiveIndex(levels, std::vector<std::vector<std::size_t>>(users));
}

void sort_positive_index(PositiveIndex& index) {
    for (auto& level : index) {
        for (auto& rows : level) {
            std::sort(rows.begin(), rows.end());
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        }
    }
}

bool TrainingData::is_cold(std::size_t user) const {
    for (const auto& level : train) {
        if (!level.at(user).empty()) return false;
    }
    return true;
}

double precision_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k) {
    if (k == 0) throw Error(ErrorKind::InvalidConfig, "k must be positive");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k) {
    if (k == 0) throw Error(ErrorKind::InvalidConfig, "k must be positive");
    if (relevant.empty()) return 0.0;
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) dcg += 1.0 / std::log2(double(i) + 2.0);
    }
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) ideal += 1.0 / std::log2(double(i) + 2.0);
    return dcg / ideal;
}

double MetricTable::mean_precision(std::size_t k) const {
    if (levels.empty()) return 0.0;
    double s = 0.0;
    for (const auto& l : levels) {
        auto it = l.at_k.find(k);
        if (it != l.at_k.end()) s += it->second.precision;
    }
    return s / static_cast<double>(levels.size());
}

double MetricTable::mean_ndcg(std::size_t k) const {
    if (levels.empty()) return 0.0;
    double s = 0.0;
    for (const auto& l : levels) {
        auto it = l.at_k.find(k);
        if (it != l.at_k.end()) s += it->second.ndcg;
    }
    return s / static_cast<double>(levels.size());
}

MetricTable evaluate(const ModelParams& params, const TrainingData& data, const PositiveIndex& relevant,
                     std::span<const std::size_t> ks) {
    if (ks.empty()) throw Error(ErrorKind::InvalidConfig, "no cutoffs given");
    const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
    const std::size_t levels = params.dims.levels();
    const std::size_t users = params.dims.users;

    std::vector<bool> cold(users, false);
    bool any_cold = false;
    for (std::size_t u = 0; u < users; ++u) {
        cold[u] = data.is_cold(u);
        any_cold = any_cold || cold[u];
    }
    // Zeroing a user's rows only changes that user's scores, so a single copy
    // serves every user.
    ModelParams zeroed;
    if (any_cold) {
        zeroed = params;
        for (std::size_t u = 0; u < users; ++u) {
            if (!cold[u]) continue;
            for (auto& m : zeroed.user_implicit) std::fill(m.row(u).begin(), m.row(u).end(), 0.0);
            for (auto& m : zeroed.user_inter) std::fill(m.row(u).begin(), m.row(u).end(), 0.0);
        }
    }
    const Scorer scorer(any_cold ? zeroed : params, data.links, data.graphs, data.history);

    MetricTable table;
    table.levels.resize(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        LevelMetrics& out = table.levels[l];
        for (std::size_t k : ks) out.at_k[k] = {};
        for (std::size_t u = 0; u < users; ++u) {
            // Missing levels or users in a short index have nothing relevant.
            if (l >= relevant.size() || u >= relevant[l].size() || relevant[l][u].empty()) continue;
            const auto& rel = relevant[l][u];
            const auto scores = scorer.score_all(u, l);
            const auto ranked = rank_rows(scores, data.train.at(l).at(u), max_k);
            for (std::size_t k : ks) {
                out.at_k[k].precision += precision_at_k(ranked, rel, k);
                out.at_k[k].ndcg += ndcg_at_k(ranked, rel, k);
            }
            ++out.users_evaluated;
            if (cold[u]) ++out.cold_start_users;
        }
        if (out.users_evaluated > 0) {
            for (auto& [k, cell] : out.at_k) {
                cell.precision /= static_cast<double>(out.users_evaluated);
                cell.ndcg /= static_cast<double>(out.users_evaluated);
            }
        }
    }
    return table;
}

double random_ndcg_baseline(const TrainingData& data, const PositiveIndex& relevant, std::size_t level,
                            std::size_t k, std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw Error(ErrorKind::InvalidConfig, "samples must be positive");
    std::mt19937_64 rng(seed);
    std::vector<double> discount(k);
    for (std::size_t i = 0; i < k; ++i) discount[i] = 1.0 / std::log2(double(i) + 2.0);

    double total = 0.0;
    std::size_t users = 0;
    for (std::size_t u = 0; u < relevant.at(level).size(); ++u) {
        const auto& rel = relevant[level][u];
        if (rel.empty()) continue;
        const std::size_t candidates = data.pois(level) - data.train.at(level).at(u).size();
        // Relevant rows that are also training rows cannot be ranked.
        std::size_t r = 0;
        for (std::size_t row : rel) {
            if (!std::binary_search(data.train[level][u].begin(), data.train[level][u].end(), row)) ++r;
        }
        double ideal = 0.0;
        for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) ideal += discount[i];
        double sum = 0.0;
        std::unordered_set<std::size_t> taken;
        for (std::size_t s = 0; s < samples; ++s) {
            // Floyd's algorithm: r distinct positions uniform over the candidate list.
            taken.clear();
            for (std::size_t j = candidates - r; j < candidates; ++j) {
                const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
                if (!taken.insert(t).second) taken.insert(j);
            }
            double dcg = 0.0;
            for (std::size_t pos : taken) {
                if (pos < k) dcg += discount[pos];
            }
            sum += dcg / ideal;
        }
        total += sum / static_cast<double>(samples);
        ++users;
    }
    return users == 0 ? 0.0 : total / static_cast<double>(users);
}

void write_metric_csv(std::ostream& out, const std::vector<std::pair<std::string, MetricTable>>& tables) {
    out << "level,model,metric,k,value,users\n";
    const auto old = out.precision(10);
    if (tables.empty()) return;
    const std::size_t levels = tables.front().second.levels.size();
    for (std::size_t l = 0; l < levels; ++l) {
        for (const char* metric : {"P", "NDCG"}) {
            for (const auto& [name, table] : tables) {
                const auto& lv = table.levels.at(l);
                for (const auto& [k, cell] : lv.at_k) {
                    out << l + 1 << ',' << name << ',' << metric << ',' << k << ','
                        << (metric[0] == 'P' ? cell.precision : cell.ndcg) << ',' << lv.users_evaluated << '\n';
                }
            }
        }
    }
    out.precision(old);
}

}  // namespace mpr
