#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace genlie {

// Little-endian binary primitives for the bank/checkpoint formats.
namespace binio {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

template <typename T>
inline void write_raw(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
inline T read_raw(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error(std::string("truncated file while reading ") + what);
    return v;
}

inline void write_u16(std::ostream& out, std::uint16_t v) { write_raw(out, v); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, v); }
inline void write_f32(std::ostream& out, float v) { write_raw(out, v); }
inline void write_f64(std::ostream& out, double v) { write_raw(out, v); }

inline std::uint16_t read_u16(std::istream& in, const char* what) { return read_raw<std::uint16_t>(in, what); }
inline std::uint32_t read_u32(std::istream& in, const char* what) { return read_raw<std::uint32_t>(in, what); }
inline float read_f32(std::istream& in, const char* what) { return read_raw<float>(in, what); }
inline double read_f64(std::istream& in, const char* what) { return read_raw<double>(in, what); }

inline void write_magic(std::ostream& out, const char magic[4]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char* magic, const std::string& path) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(path + ": bad magic, expected '" + std::string(magic, 4) + "'");
}

}  // namespace binio
}  // namespace genlie
