// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "egoc/tensor.hpp"

namespace egoc::io {

/// Binary tensor container: "EGOC" | u16 version | u8 dtype (0 = f32) |
/// u8 rank | u32 dims[rank] | row-major f32 payload | u32 CRC32 over all
/// preceding bytes. Everything little-endian. The CRC makes truncation and
/// bit corruption detectable on read.
inline constexpr char kTensorMagic[4] = {'E', 'G', 'O', 'C'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr const char* kTensorExtension = ".egoc";

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_tensor(const TensorF& t) {
    if (t.rank() > 16) throw std::invalid_argument("tensor file: rank above 16 unsupported");
    std::vector<std::uint8_t> buf;
    buf.reserve(12 + 4 * t.rank() + 4 * t.numel());
    for (char c : kTensorMagic) buf.push_back(static_cast<std::uint8_t>(c));
    detail::put_u16(buf, kTensorVersion);
    buf.push_back(0);  // dtype f32
    buf.push_back(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (t.dim(i) > 0xffffffffULL) throw std::invalid_argument("tensor file: dimension overflow");
        detail::put_u32(buf, static_cast<std::uint32_t>(t.dim(i)));
    }
    for (std::size_t e = 0; e < t.numel(); ++e)
        detail::put_u32(buf, std::bit_cast<std::uint32_t>(t[e]));
    std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
    crc = static_cast<std::uint32_t>(::crc32(crc, buf.data(), static_cast<uInt>(buf.size())));
    detail::put_u32(buf, crc);
    return buf;
}

inline TensorF decode_tensor(const std::vector<std::uint8_t>& buf) {
    if (buf.size() < 12) throw std::runtime_error("tensor file: truncated header");
    for (int i = 0; i < 4; ++i)
        if (buf[static_cast<std::size_t>(i)] != static_cast<std::uint8_t>(kTensorMagic[i]))
            throw std::runtime_error("tensor file: bad magic");
    if (detail::get_u16(buf.data() + 4) != kTensorVersion)
        throw std::runtime_error("tensor file: unsupported version");
    if (buf[6] != 0) throw std::runtime_error("tensor file: unsupported dtype");
    const std::size_t rank = buf[7];
    if (rank > 16) throw std::runtime_error("tensor file: rank above 16 unsupported");
    std::size_t at = 8;
    if (buf.size() < at + 4 * rank + 4) throw std::runtime_error("tensor file: truncated dims");
    std::vector<std::size_t> dims(rank);
    std::size_t numel = 1;
    for (std::size_t i = 0; i < rank; ++i, at += 4) {
        dims[i] = detail::get_u32(buf.data() + at);
        if (dims[i] == 0) throw std::runtime_error("tensor file: zero dimension");
        if (numel > (static_cast<std::size_t>(1) << 40) / dims[i])
            throw std::runtime_error("tensor file: implausible element count");
        numel *= dims[i];
    }
    if (buf.size() != at + 4 * numel + 4)
        throw std::runtime_error("tensor file: payload length does not match dims");

    std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
    crc = static_cast<std::uint32_t>(
        ::crc32(crc, buf.data(), static_cast<uInt>(buf.size() - 4)));
    if (crc != detail::get_u32(buf.data() + buf.size() - 4))
        throw std::runtime_error("tensor file: CRC mismatch (corrupted data)");

    TensorF t(dims, 0.0f);
    for (std::size_t e = 0; e < numel; ++e, at += 4)
        t[e] = std::bit_cast<float>(detail::get_u32(buf.data() + at));
    return t;
}

inline void write_tensor(const std::string& path, const TensorF& t) {
    const std::vector<std::uint8_t> buf = encode_tensor(t);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("tensor file: cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os.good()) throw std::runtime_error("tensor file: write to '" + path + "' failed");
}

/// Doubles are narrowed to f32 on write; the on-disk format is f32-only.
inline void write_tensor(const std::string& path, const Tensor& t) {
    TensorF f(t.dims(), 0.0f);
    for (std::size_t e = 0; e < t.numel(); ++e) f[e] = static_cast<float>(t[e]);
    write_tensor(path, f);
}

inline TensorF read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("tensor file: cannot open '" + path + "'");
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
    return decode_tensor(buf);
}

/// CRC32 of an arbitrary byte string; used to fingerprint parameter blocks
/// in run manifests.
inline std::uint32_t crc32_bytes(const std::uint8_t* data, std::size_t len) {
    std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
    return static_cast<std::uint32_t>(::crc32(crc, data, static_cast<uInt>(len)));
}

inline std::uint32_t crc32_tensor(const TensorF& t) {
    // The container's trailing checksum; never CRC over it again — CRC of a
    // message plus its own CRC collapses to a constant residue.
    const std::vector<std::uint8_t> buf = encode_tensor(t);
    return detail::get_u32(buf.data() + buf.size() - 4);
}

}  // namespace egoc::io
