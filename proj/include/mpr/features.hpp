#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mpr/dataset.hpp"
#include "mpr/matrix.hpp"

namespace mpr {

enum class RuleKind { Numeric, Categorical };
enum class Polarity { Less, GreaterEqual, Equal, NotEqual };

// One binary decision feature over a raw attribute, e.g. [age < 20] or
// [hobby = reading].
struct DecisionRule {
    std::string attribute;
    RuleKind kind = RuleKind::Numeric;
    double threshold = 0.0;
    std::string category;
    Polarity polarity = Polarity::Less;

    bool matches(const AttributeProfile& profile) const;
    std::string name() const;

    bool operator==(const DecisionRule&) const = default;
};

struct RuleOptions {
    // Each quantile q yields a [a < θ_q], [a >= θ_q] pair; 0.5 is the median.
    std::vector<double> quantiles{0.5};
    std::size_t min_category_support = 1;
};

// Rules ordered by attribute name; numeric pairs by ascending threshold,
// categorical values lexicographically.
std::vector<DecisionRule> compile_rules(std::span<const AttributeProfile> profiles,
                                        const RuleOptions& options = {});

std::set<std::string> attribute_vocabulary(std::span<const AttributeProfile> profiles);

// (i,k) = 1 iff profile i satisfies rule k. Rules must only reference
// attributes in the vocabulary (defaults to the attributes of `profiles`).
Matrix build_direct(std::span<const AttributeProfile> profiles, std::span<const DecisionRule> rules,
                    const std::set<std::string>* vocabulary = nullptr);

// Row-wise min-max over the touched (non-zero) entries of a count matrix.
// A row whose touched counts are all equal maps them to 1.0; untouched
// entries stay 0.
Matrix normalize_inverse_counts(const Matrix& counts);

// A visit from row `row` of the matrix being built to row `other` of the
// attribute matrix on the far side of the interaction. Repeat visits are
// listed repeatedly.
using Visit = std::pair<std::size_t, std::size_t>;

// X_T: counts, per user, visits to POIs carrying each POI feature.
Matrix build_inverse_user(std::size_t users, std::span<const Visit> visits, const Matrix& poi_direct);

// Y_T: counts, per POI, visits by users carrying each user feature.
Matrix build_inverse_poi(std::size_t pois, std::span<const Visit> visits, const Matrix& user_direct);

// Column layout shared by users and POIs: the f_u user features first,
// then the f_p POI features. Users fill it as X_A ⊕ X_T and POIs as
// Y_T ⊕ Y_A, so column k means the same feature on both sides of the
// shared factor V.
struct FeatureMatrices {
    Matrix x;               // m x f
    std::vector<Matrix> y;  // per level, n_l x f
    std::size_t f_user = 0;
    std::size_t f_poi = 0;
    std::vector<DecisionRule> user_rules;
    std::vector<DecisionRule> poi_rules;

    std::size_t f() const noexcept { return f_user + f_poi; }
    std::vector<std::string> feature_names() const;
};

FeatureMatrices assemble(const Matrix& x_direct, const Matrix& x_inverse,
                         const std::vector<Matrix>& y_direct, const std::vector<Matrix>& y_inverse);

// Binary container: "MPRMAT01", u64 header length, JSON header, then
// rows*cols little-endian doubles in row-major order.
void write_matrix_file(const std::string& path, const Matrix& m, nlohmann::json header = {});
std::pair<Matrix, nlohmann::json> read_matrix_file(const std::string& path);

}  // namespace mpr
