#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cort::io {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

inline void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f32(std::ostream& out, float v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f32s(std::ostream& out, const float* data, std::size_t n) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error("unexpected end of file while reading " + what);
    }
    return v;
}

inline void read_f32s(std::istream& in, float* data, std::size_t n, const std::string& what) {
    if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)))) {
        throw std::runtime_error("size mismatch while reading " + what);
    }
}

inline void write_magic(std::ostream& out, const char magic[9]) {
    out.write(magic, 8);
}

inline void expect_magic(std::istream& in, const char magic[9], const std::string& path) {
    char buf[8];
    if (!in.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
        throw std::runtime_error(path + ": magic mismatch, expected " + std::string(magic, 8));
    }
}

}  // namespace cort::io
