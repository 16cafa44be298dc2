#include "diffkg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "diffkg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

namespace diffkg {

namespace {

constexpr char kMagic[4] = {'D', 'K', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError(path + ": truncated checkpoint");
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint8_t>(out, sizeof(real));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dims.size()));
        std::size_t n = 1;
        for (std::size_t d : e.dims) {
            put<std::uint64_t>(out, d);
            n *= d;
        }
        if (n != e.data.size()) {
            throw std::invalid_argument("checkpoint entry " + e.name + ": dims do not match data");
        }
        out.write(reinterpret_cast<const char*>(e.data.data()),
                  static_cast<std::streamsize>(e.data.size() * sizeof(real)));
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError(path + ": not a checkpoint file");
    }
    auto version = get<std::uint32_t>(in, path);
    if (version != kVersion) {
        throw DataError(path + ": checkpoint version " + std::to_string(version) +
                        " not supported (expected " + std::to_string(kVersion) + ")");
    }
    auto width = get<std::uint8_t>(in, path);
    if (width != sizeof(real)) {
        throw DataError(path + ": float width " + std::to_string(width) +
                        " does not match this build (" + std::to_string(sizeof(real)) + ")");
    }
    auto count = get<std::uint32_t>(in, path);
    std::vector<CheckpointEntry> entries;
    entries.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        CheckpointEntry e;
        auto name_len = get<std::uint32_t>(in, path);
        e.name.resize(name_len);
        in.read(e.name.data(), name_len);
        if (!in) throw DataError(path + ": truncated checkpoint");
        auto rank = get<std::uint32_t>(in, path);
        std::size_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            e.dims.push_back(static_cast<std::size_t>(get<std::uint64_t>(in, path)));
            n *= e.dims.back();
        }
        e.data.resize(n);
        in.read(reinterpret_cast<char*>(e.data.data()),
                static_cast<std::streamsize>(n * sizeof(real)));
        if (!in) throw DataError(path + ": truncated checkpoint");
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace diffkg
