#pragma once

// Little-endian primitive encoding shared by the matrix container and the
// model checkpoint.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace mpr::detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

// Bounds-checked cursor over a byte buffer; ok() turns false on overrun.
class Reader {
public:
    explicit Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}

    bool ok() const noexcept { return ok_; }
    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return ok_ ? end_ - pos_ : 0; }

    std::uint64_t u64() {
        if (!take(8)) return 0;
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf_[pos_ - 8 + i])) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        if (!take(4)) return 0;
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf_[pos_ - 4 + i])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t n) {
        if (!take(n)) return {};
        return buf_.substr(pos_ - n, n);
    }

private:
    bool take(std::size_t n) {
        if (!ok_ || end_ - pos_ < n) {
            ok_ = false;
            return false;
        }
        pos_ += n;
        return true;
    }

    const std::string& buf_;
    std::size_t end_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace mpr::detail
