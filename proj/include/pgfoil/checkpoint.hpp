// Self-describing binary tensor container.
//
// Layout: magic "PGFL", format version (u32 LE), then per-tensor records:
//   name length (u32 LE), name bytes, rank (u32 LE), dims (u64 LE each),
//   data (64-bit IEEE doubles, LE). Records run to end of file.
// Round-trips are bit-exact.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "pgfoil/errors.hpp"
#include "pgfoil/tensor.hpp"

namespace pgfoil {

inline constexpr char kCheckpointMagic[4] = {'P', 'G', 'F', 'L'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, ad::Tensor>>;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    bool at_end() const { return pos >= buf.size(); }

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size())
            throw FormatError(std::string("checkpoint: truncated while reading ") + what);
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace detail

/// Atomic write: serialize to <path>.tmp, then rename over path.
inline void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
    std::string out;
    out.append(kCheckpointMagic, 4);
    detail::put_u32(out, kCheckpointVersion);
    for (const auto& [name, t] : tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.append(name);
        detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) detail::put_u64(out, d);
        for (double v : t.data()) detail::put_f64(out, v);
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw FormatError("checkpoint: cannot open '" + tmp.string() + "' for writing");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw FormatError("checkpoint: write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline NamedTensors load_tensors(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("checkpoint: cannot open '" + path.string() + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::Reader r{buf};
    const std::string magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic in '" + path.string() + "'");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported format version " + std::to_string(version));

    NamedTensors out;
    while (!r.at_end()) {
        const std::uint32_t name_len = r.u32("name length");
        const std::string name = r.bytes(name_len, "name");
        const std::uint32_t rank = r.u32("rank");
        ad::Shape shape;
        std::size_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape.push_back(static_cast<std::size_t>(r.u64("dim")));
            numel *= shape.back();
        }
        std::vector<double> data(numel);
        for (auto& v : data) v = r.f64("data");
        out.emplace_back(name, ad::Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

}  // namespace pgfoil
