#include "mpr/matrix.hpp"

#include <algorithm>
#include <string>

#include "mpr/simd/kernels.hpp"

namespace mpr {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnknownParent: return "UnknownParent";
        case ErrorKind::CycleDetected: return "CycleDetected";
        case ErrorKind::LevelMismatch: return "LevelMismatch";
        case ErrorKind::MultipleParents: return "MultipleParents";
        case ErrorKind::DuplicateNode: return "DuplicateNode";
        case ErrorKind::UnknownNode: return "UnknownNode";
        case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::UnknownPoi: return "UnknownPoi";
        case ErrorKind::UnknownUser: return "UnknownUser";
        case ErrorKind::EmptyAfterFilter: return "EmptyAfterFilter";
        case ErrorKind::WindowTooLarge: return "WindowTooLarge";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::UnknownAttribute: return "UnknownAttribute";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::MissingCoordinates: return "MissingCoordinates";
        case ErrorKind::LeafLevel: return "LeafLevel";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
        case ErrorKind::NoNegativeAvailable: return "NoNegativeAvailable";
        case ErrorKind::LeafPoi: return "LeafPoi";
        case ErrorKind::ZeroTotalScore: return "ZeroTotalScore";
        case ErrorKind::Diverged: return "Diverged";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "hconcat rows " + std::to_string(a.rows()) +
                                                      " vs " + std::to_string(b.rows()));
    }
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
        std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<long>(a.cols()));
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "matmul inner dimension");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = a(i, k);
            if (s != 0.0) simd::axpy(s, b.row(k), dst);
        }
    }
    return out;
}

std::vector<double> row_times(std::span<const double> x, const Matrix& b) {
    if (x.size() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "row_times");
    std::vector<double> out(b.cols(), 0.0);
    for (std::size_t k = 0; k < b.rows(); ++k) simd::axpy(x[k], b.row(k), out);
    return out;
}

double frobenius_squared(const Matrix& m) {
    return simd::dot(m.values(), m.values());
}

Matrix min_max_normalized(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    if (m.empty()) return out;
    const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
    const double span = *hi - *lo;
    if (span <= 0.0) return out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        out.values()[i] = (m.values()[i] - *lo) / span;
    }
    return out;
}

}  // namespace mpr
