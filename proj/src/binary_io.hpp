// Little-endian encoding helpers shared by the operator and cache formats.
#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "tribaker/errors.hpp"

namespace tribaker::detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_complex(std::string& out, std::complex<double> z) {
    put_f64(out, z.real());
    put_f64(out, z.imag());
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw FormatError("truncated binary data");
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint64_t u64() {
        auto s = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(s[i]);
        return v;
    }
    std::uint32_t u32() {
        auto s = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(s[i]);
        return v;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::complex<double> complex() {
        const double re = f64();
        return {re, f64()};
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace tribaker::detail
