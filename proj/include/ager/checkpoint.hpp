#pragma once

// Binary checkpoints: parameters + AdamW moments + run metadata, stamped
// with the config hash so resuming under a different configuration fails
// loudly. Byte layout is fixed little-endian; round-trips are bitwise.

#include "ager/config.hpp"
#include "ager/errors.hpp"
#include "ager/params.hpp"

#include <cstring>
#include <fstream>

namespace ager {

namespace ckpt_detail {
inline void write_u32(std::ostream& o, uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ostream& o, uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }
inline uint32_t read_u32(std::istream& i) {
    uint32_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline uint64_t read_u64(std::istream& i) {
    uint64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
}  // namespace ckpt_detail

constexpr char kCheckpointMagic[8] = {'A', 'G', 'E', 'R', 'C', 'K', 'P', '1'};

template <class T>
void save_checkpoint(const std::string& path, const ParamStore<T>& store, const AdamW<T>& opt,
                     const RunConfig& cfg, int next_epoch) {
    using namespace ckpt_detail;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot write checkpoint " + path);
    out.write(kCheckpointMagic, 8);
    write_u32(out, sizeof(T));
    write_u64(out, cfg.hash());
    write_u64(out, cfg.seed);
    write_u32(out, static_cast<uint32_t>(next_epoch));
    write_u64(out, static_cast<uint64_t>(opt.step_count));
    write_u64(out, static_cast<uint64_t>(store.entries.size()));
    for (const auto& e : store.entries) {
        write_u32(out, static_cast<uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_u32(out, static_cast<uint32_t>(e.value.shape.size()));
        for (int d : e.value.shape) write_u32(out, static_cast<uint32_t>(d));
        const auto n = static_cast<std::streamsize>(e.value.numel() * sizeof(T));
        out.write(reinterpret_cast<const char*>(e.value.data()), n);
        out.write(reinterpret_cast<const char*>(e.m.data()), n);
        out.write(reinterpret_cast<const char*>(e.v.data()), n);
    }
}

template <class T>
int load_checkpoint(const std::string& path, ParamStore<T>& store, AdamW<T>& opt,
                    const RunConfig& cfg) {
    using namespace ckpt_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw FormatError("not a checkpoint file: " + path);
    if (read_u32(in) != sizeof(T))
        throw ResumeMismatchError("checkpoint dtype differs from the configured dtype");
    if (read_u64(in) != cfg.hash())
        throw ResumeMismatchError("checkpoint config hash differs from the active config");
    read_u64(in);  // seed (informational; covered by the config hash)
    const int next_epoch = static_cast<int>(read_u32(in));
    opt.step_count = static_cast<int64_t>(read_u64(in));
    const uint64_t n_params = read_u64(in);
    if (n_params != store.entries.size())
        throw ResumeMismatchError("checkpoint parameter count differs");
    for (auto& e : store.entries) {
        const uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != e.name) throw ResumeMismatchError("checkpoint parameter order differs: " + name);
        const uint32_t rank = read_u32(in);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(read_u32(in));
        if (shape != e.value.shape) throw ResumeMismatchError("checkpoint shape differs: " + name);
        const auto n = static_cast<std::streamsize>(e.value.numel() * sizeof(T));
        in.read(reinterpret_cast<char*>(e.value.data()), n);
        in.read(reinterpret_cast<char*>(e.m.data()), n);
        in.read(reinterpret_cast<char*>(e.v.data()), n);
    }
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return next_epoch;
}

}  // namespace ager
