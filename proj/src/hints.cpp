#include "mpr/hints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpr/error.hpp"
#include "mpr/simd/kernels.hpp"

namespace mpr {

UserAspect user_aspect(std::span<const double> uf, std::span<const double> pf, std::size_t k) {
    if (uf.size() != pf.size()) throw Error(ErrorKind::DimensionMismatch, "uf and pf lengths differ");
    if (k == 0 || k > uf.size()) {
        throw Error(ErrorKind::InvalidConfig, "K=" + std::to_string(k) + " with " + std::to_string(uf.size()) +
                                                  " features");
    }
    std::vector<std::size_t> cols(uf.size());
    std::iota(cols.begin(), cols.end(), 0);
    std::partial_sort(cols.begin(), cols.begin() + static_cast<long>(k), cols.end(),
                      [&](std::size_t a, std::size_t b) { return uf[a] != uf[b] ? uf[a] > uf[b] : a < b; });
    cols.resize(k);

    UserAspect out;
    out.features = cols;
    for (std::size_t c : cols) out.user_values.push_back(uf[c]);
    std::size_t best = cols.front();
    for (std::size_t c : cols) {
        if (pf[c] > pf[best] || (pf[c] == pf[best] && c < best)) best = c;
    }
    out.hint_feature = best;
    out.hint_value = pf[best];
    return out;
}

UserAspect user_aspect(const ModelParams& params, std::size_t user, std::size_t poi, std::size_t level,
                       std::size_t k) {
    const ModelDims& d = params.dims;
    if (level >= d.levels() || user >= d.users || poi >= d.pois[level]) {
        throw Error(ErrorKind::IndexOutOfRange, "user-aspect indices");
    }
    const auto uf = row_times(params.user_explicit.row(user), params.shared_latent);
    const auto pf = row_times(params.poi_explicit[level].row(poi), params.shared_latent);
    return user_aspect(uf, pf, k);
}

PoiAspect poi_aspect(std::span<const double> dots) {
    if (dots.empty()) throw Error(ErrorKind::LeafPoi, "no children");
    PoiAspect out;
    out.dots.assign(dots.begin(), dots.end());
    const double sum = std::accumulate(dots.begin(), dots.end(), 0.0);
    out.negative = std::any_of(dots.begin(), dots.end(), [](double v) { return v < 0.0; });
    out.degenerate = sum == 0.0;
    for (double v : dots) out.ratios.push_back(out.degenerate ? 1.0 / double(dots.size()) : v / sum);
    const double top = *std::max_element(dots.begin(), dots.end());
    double norm = 0.0;
    for (double v : dots) {
        out.softmax.push_back(std::exp(v - top));
        norm += out.softmax.back();
    }
    for (double& v : out.softmax) v /= norm;
    out.hot = static_cast<std::size_t>(std::max_element(out.ratios.begin(), out.ratios.end()) - out.ratios.begin());
    return out;
}

PoiAspect poi_aspect(const ModelParams& params, const TreeLinks& links, std::size_t user, std::size_t parent,
                     std::size_t level) {
    const ModelDims& d = params.dims;
    if (level >= d.levels() || user >= d.users || parent >= d.pois[level]) {
        throw Error(ErrorKind::IndexOutOfRange, "poi-aspect indices");
    }
    if (d.is_leaf(level)) throw Error(ErrorKind::LeafPoi, "leaf-level POI has no children");
    const auto& children = links.children.at(level).at(parent);
    if (children.empty()) throw Error(ErrorKind::LeafPoi, "POI has no children");
    std::vector<double> dots;
    for (std::size_t c : children) {
        dots.push_back(simd::dot(params.user_inter[level].row(user), params.poi_implicit[level + 1].row(c)));
    }
    PoiAspect out = poi_aspect(dots);
    out.children = children;
    return out;
}

InteractionAspect interaction_aspect(double historical, double total, double threshold) {
    if (total == 0.0) throw Error(ErrorKind::ZeroTotalScore, "O = 0");
    InteractionAspect out;
    out.eta = historical / total;
    out.important = out.eta > threshold;
    return out;
}

InteractionAspect interaction_aspect(const Scorer& scorer, std::size_t user, std::size_t poi, std::size_t level,
                                     double threshold) {
    const double gamma = scorer.params().dims.gamma;
    const double historical = gamma == 0.0 ? 0.0 : gamma * scorer.historical_score(user, poi, level);
    return interaction_aspect(historical, scorer.feature_score(user, poi, level) + historical, threshold);
}

Matrix user_feature_heatmap(const ModelParams& params, std::span<const std::size_t> users) {
    Matrix m(users.size(), params.dims.features);
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto uf = row_times(params.user_explicit.row(users[i]), params.shared_latent);
        std::copy(uf.begin(), uf.end(), m.row(i).begin());
    }
    return min_max_normalized(m);
}

Matrix child_contribution_heatmap(const ModelParams& params, const TreeLinks& links,
                                  std::span<const std::size_t> users, std::size_t parent, std::size_t level) {
    Matrix m;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const PoiAspect pa = poi_aspect(params, links, users[i], parent, level);
        if (m.empty()) m = Matrix(users.size(), pa.ratios.size());
        std::copy(pa.ratios.begin(), pa.ratios.end(), m.row(i).begin());
    }
    return min_max_normalized(m);
}

Matrix interaction_heatmap(const Scorer& scorer, std::span<const std::size_t> users, std::span<const std::size_t> pois,
                           std::size_t level) {
    Matrix m(users.size(), pois.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        for (std::size_t j = 0; j < pois.size(); ++j) {
            try {
                m(i, j) = interaction_aspect(scorer, users[i], pois[j], level).eta;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::ZeroTotalScore) throw;
            }
        }
    }
    return min_max_normalized(m);
}

void write_heatmap_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels) {
    if (row_labels.size() != m.rows() || col_labels.size() != m.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "heat-map labels");
    }
    const auto old = out.precision(10);
    out << "id";
    for (const auto& c : col_labels) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << row_labels[r];
        for (double v : m.row(r)) out << ',' << v;
        out << '\n';
    }
    out.precision(old);
}

}  // namespace mpr
