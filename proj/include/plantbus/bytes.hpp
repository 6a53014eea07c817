// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

// Big-endian byte packing used by the wire protocol and payload codecs.

namespace plantbus::bytes {

inline void putU8(std::vector<std::uint8_t>& out, std::uint8_t v) {
    out.push_back(v);
}

inline void putU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void putU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void putU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    putU32(out, static_cast<std::uint32_t>(v >> 32));
    putU32(out, static_cast<std::uint32_t>(v));
}

inline void putI64(std::vector<std::uint8_t>& out, std::int64_t v) {
    putU64(out, static_cast<std::uint64_t>(v));
}

inline void putF64(std::vector<std::uint8_t>& out, double v) {
    putU64(out, std::bit_cast<std::uint64_t>(v));
}

inline void putString(std::vector<std::uint8_t>& out, std::string_view s) {
    putU16(out, static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

/// Sequential big-endian reader over a byte span. `ok()` turns false on
/// under-run instead of throwing; callers check it once at the end.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return take(1) ? data_[pos_ - 1] : 0; }

    std::uint16_t u16() {
        if (!take(2)) return 0;
        return static_cast<std::uint16_t>((data_[pos_ - 2] << 8) | data_[pos_ - 1]);
    }

    std::uint32_t u32() {
        if (!take(4)) return 0;
        std::uint32_t v = 0;
        for (std::size_t i = pos_ - 4; i < pos_; ++i) v = (v << 8) | data_[i];
        return v;
    }

    std::uint64_t u64() {
        std::uint64_t hi = u32();
        return (hi << 32) | u32();
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str() {
        std::uint16_t n = u16();
        if (!take(n)) return {};
        return std::string(reinterpret_cast<const char*>(data_.data()) + pos_ - n, n);
    }

    std::vector<std::uint8_t> rest() {
        std::vector<std::uint8_t> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_), data_.end());
        pos_ = data_.size();
        return out;
    }

    bool ok() const { return ok_; }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    bool take(std::size_t n) {
        if (!ok_ || data_.size() - pos_ < n) {
            ok_ = false;
            return false;
        }
        pos_ += n;
        return true;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

}  // namespace plantbus::bytes
