#pragma once

// Flat binary weight snapshots. Layout (little-endian throughout):
//   magic "AMNW", u32 version=1, u32 record count, then per record:
//   u32 name length, name bytes, u8 dtype (0=f32, 1=f64), u32 rank=4,
//   u32 dims[4] (n,c,h,w), raw payload.
// Records appear in parameter-store order and include the running statistics
// buffers, so a reloaded model reproduces inference bitwise.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "asymmkit/params.hpp"

namespace asymmkit {

static_assert(std::endian::native == std::endian::little,
              "weight files assume a little-endian host");

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("weights: truncated file");
    return v;
}

template <typename T>
constexpr std::uint8_t dtype_code() {
    return sizeof(T) == 4 ? 0 : 1;
}

}  // namespace detail

template <typename T>
void save_weights(const ParamStore<T>& store, std::ostream& os) {
    os.write("AMNW", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(store.size()));
    for (std::size_t i = 0; i < store.size(); ++i) {
        const ParamEntry<T>& e = store[i];
        detail::put_u32(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        const std::uint8_t dt = detail::dtype_code<T>();
        os.write(reinterpret_cast<const char*>(&dt), 1);
        detail::put_u32(os, 4);
        const Shape s = e.value.shape();
        detail::put_u32(os, static_cast<std::uint32_t>(s.n));
        detail::put_u32(os, static_cast<std::uint32_t>(s.c));
        detail::put_u32(os, static_cast<std::uint32_t>(s.h));
        detail::put_u32(os, static_cast<std::uint32_t>(s.w));
        os.write(reinterpret_cast<const char*>(e.value.data()),
                 static_cast<std::streamsize>(e.value.size() * sizeof(T)));
    }
    if (!os) throw std::runtime_error("weights: write failed");
}

template <typename T>
void save_weights(const ParamStore<T>& store, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("weights: cannot open for writing: " + path);
    save_weights(store, f);
}

// Loads records into an already-built store. Record names and shapes must
// match the store sequentially and exactly — a weight file only fits the
// architecture it was exported from.
template <typename T>
void load_weights(ParamStore<T>& store, std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "AMNW", 4) != 0)
        throw std::runtime_error("weights: bad magic");
    const std::uint32_t version = detail::get_u32(is);
    if (version != 1) throw std::runtime_error("weights: unsupported version " + std::to_string(version));
    const std::uint32_t count = detail::get_u32(is);
    if (count != store.size())
        throw std::runtime_error("weights: record count " + std::to_string(count) +
                                 " does not match model (" + std::to_string(store.size()) + ")");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = detail::get_u32(is);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw std::runtime_error("weights: truncated name");
        ParamEntry<T>& e = store[i];
        if (name != e.name)
            throw std::runtime_error("weights: record '" + name + "' where model expects '" +
                                     e.name + "'");
        std::uint8_t dt = 0;
        if (!is.read(reinterpret_cast<char*>(&dt), 1)) throw std::runtime_error("weights: truncated dtype");
        if (dt != detail::dtype_code<T>())
            throw std::runtime_error("weights: dtype mismatch for '" + name + "'");
        const std::uint32_t rank = detail::get_u32(is);
        if (rank != 4) throw std::runtime_error("weights: unsupported rank for '" + name + "'");
        Shape s{static_cast<int>(detail::get_u32(is)), static_cast<int>(detail::get_u32(is)),
                static_cast<int>(detail::get_u32(is)), static_cast<int>(detail::get_u32(is))};
        if (!(s == e.value.shape()))
            throw std::runtime_error("weights: shape mismatch for '" + name + "': file " + s.str() +
                                     " vs model " + e.value.shape().str());
        if (!is.read(reinterpret_cast<char*>(e.value.data()),
                     static_cast<std::streamsize>(e.value.size() * sizeof(T))))
            throw std::runtime_error("weights: truncated payload for '" + name + "'");
    }
}

template <typename T>
void load_weights(ParamStore<T>& store, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("weights: cannot open: " + path);
    load_weights(store, f);
}

}  // namespace asymmkit
