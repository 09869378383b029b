// FMAP: lossless float-map interchange format.
//
//   magic   "FMAP1\n"
//   header  "<width> <height>\n"   (ASCII decimal)
//   payload width*height little-endian IEEE-754 binary32, row-major
//
// Round-trips are bit-exact, including signed zeros, denormals and values
// outside [0,1].
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "blurmap/image.hpp"

namespace blurmap {

inline std::vector<std::uint8_t> fmap_encode(const GrayImage& map) {
    std::string header = "FMAP1\n" + std::to_string(map.width) + " " +
                         std::to_string(map.height) + "\n";
    std::vector<std::uint8_t> out(header.size() + map.pixels() * 4);
    std::memcpy(out.data(), header.data(), header.size());
    std::uint8_t* p = out.data() + header.size();
    for (float v : map.data) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        p[0] = static_cast<std::uint8_t>(bits & 0xff);
        p[1] = static_cast<std::uint8_t>((bits >> 8) & 0xff);
        p[2] = static_cast<std::uint8_t>((bits >> 16) & 0xff);
        p[3] = static_cast<std::uint8_t>((bits >> 24) & 0xff);
        p += 4;
    }
    return out;
}

inline GrayImage fmap_decode(const std::uint8_t* data, size_t size, const std::string& what) {
    static constexpr char kMagic[] = "FMAP1\n";
    if (size < 6 || std::memcmp(data, kMagic, 6) != 0)
        throw std::runtime_error("not an FMAP file: " + what);
    size_t pos = 6;
    auto parse_int = [&](char terminator) {
        long v = 0;
        bool any = false;
        while (pos < size && data[pos] >= '0' && data[pos] <= '9') {
            v = v * 10 + (data[pos] - '0');
            ++pos;
            any = true;
            if (v > 1 << 24) throw std::runtime_error("FMAP dimension too large: " + what);
        }
        if (!any || pos >= size || data[pos] != static_cast<std::uint8_t>(terminator))
            throw std::runtime_error("malformed FMAP header: " + what);
        ++pos;
        return static_cast<int>(v);
    };
    int w = parse_int(' ');
    int h = parse_int('\n');
    if (w < 1 || h < 1) throw std::runtime_error("malformed FMAP header: " + what);
    size_t payload = static_cast<size_t>(w) * h * 4;
    if (size - pos != payload)
        throw std::runtime_error("FMAP payload size mismatch: " + what);
    GrayImage out(w, h);
    const std::uint8_t* p = data + pos;
    for (size_t i = 0; i < out.pixels(); ++i, p += 4) {
        std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
        out.data[i] = std::bit_cast<float>(bits);
    }
    return out;
}

inline void write_fmap(const std::string& path, const GrayImage& map) {
    std::vector<std::uint8_t> bytes = fmap_encode(map);
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open FMAP for writing: " + path);
    size_t n = std::fwrite(bytes.data(), 1, bytes.size(), fp);
    std::fclose(fp);
    if (n != bytes.size()) throw std::runtime_error("short FMAP write: " + path);
}

inline GrayImage read_fmap(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open FMAP for reading: " + path);
    std::fseek(fp, 0, SEEK_END);
    long sz = std::ftell(fp);
    std::fseek(fp, 0, SEEK_SET);
    std::vector<std::uint8_t> bytes(static_cast<size_t>(sz));
    size_t n = std::fread(bytes.data(), 1, bytes.size(), fp);
    std::fclose(fp);
    if (n != bytes.size()) throw std::runtime_error("short FMAP read: " + path);
    return fmap_decode(bytes.data(), bytes.size(), path);
}

}  // namespace blurmap
