#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace protolife {

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Little-endian byte stream with a trailing FNV-1a checksum. Truncation or a
// flipped byte surfaces as an explicit SnapshotError on read; a reader never
// yields partial state.
class ByteWriter {
public:
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u64(s.size());
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    template <typename T, typename Fn>
    void vec(const std::vector<T>& v, Fn&& per_item) {
        u64(v.size());
        for (const auto& item : v) per_item(item);
    }
    void f64_vec(const std::vector<double>& v) {
        u64(v.size());
        for (double d : v) f64(d);
    }

    void finish_with_checksum() { u64(fnv1a(bytes.data(), bytes.size())); }

    static std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (std::size_t i = 0; i < n; ++i) {
            h ^= data[i];
            h *= 0x100000001B3ull;
        }
        return h;
    }
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : data_(bytes.data()), size_(bytes.size()) {}
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    // Validates the trailing checksum up front and hides it from the payload.
    void verify_checksum() {
        if (size_ < 8) throw SnapshotError("snapshot truncated: no checksum");
        std::uint64_t stored = 0;
        for (int i = 0; i < 8; ++i)
            stored |= static_cast<std::uint64_t>(data_[size_ - 8 + i]) << (8 * i);
        if (ByteWriter::fnv1a(data_, size_ - 8) != stored)
            throw SnapshotError("snapshot corrupt: checksum mismatch");
        size_ -= 8;
    }

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        const std::uint8_t* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const std::uint8_t* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        std::uint64_t n = u64();
        if (n > remaining()) throw SnapshotError("snapshot truncated: string length");
        const std::uint8_t* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    std::uint64_t count() {
        std::uint64_t n = u64();
        if (n > remaining()) throw SnapshotError("snapshot truncated: impossible count");
        return n;
    }
    std::vector<double> f64_vec() {
        std::uint64_t n = u64();
        if (n * 8 > remaining()) throw SnapshotError("snapshot truncated: vector length");
        std::vector<double> v(n);
        for (auto& d : v) d = f64();
        return v;
    }
    std::size_t remaining() const { return size_ - pos_; }
    void expect_end() const {
        if (pos_ != size_) throw SnapshotError("snapshot has trailing bytes");
    }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;

    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > size_) throw SnapshotError("snapshot truncated");
        const std::uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }
};

} // namespace protolife
