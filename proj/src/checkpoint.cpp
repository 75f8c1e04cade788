#include "rasa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "rasa/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace rasa {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'S', 'A', 'C', 'K', 'P', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw CheckpointMismatch(std::string("truncated checkpoint while reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        write_u32(out, static_cast<std::uint32_t>(p->id.size()));
        out.write(p->id.data(), static_cast<std::streamsize>(p->id.size()));
        write_u32(out, static_cast<std::uint32_t>(p->tensor.shape.size()));
        for (int d : p->tensor.shape) write_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(p->tensor.values.data()),
                  static_cast<std::streamsize>(p->tensor.values.size() * sizeof(double)));
    }
    if (!out) throw Error("failed writing checkpoint: " + path);
}

void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointMismatch("not a checkpoint file (bad magic): " + path);
    }
    const std::uint32_t count = read_u32(in, "record count");
    if (count != params.size()) {
        throw CheckpointMismatch("checkpoint holds " + std::to_string(count) +
                                 " parameters, model expects " + std::to_string(params.size()));
    }

    struct Record {
        std::vector<int> shape;
        std::vector<double> values;
    };
    std::unordered_map<std::string, Record> records;
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t id_len = read_u32(in, "id length");
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        if (!in) throw CheckpointMismatch("truncated checkpoint while reading id");
        Record rec;
        const std::uint32_t rank = read_u32(in, "rank");
        std::size_t n = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint32_t d = read_u32(in, "dimension");
            rec.shape.push_back(static_cast<int>(d));
            n *= d;
        }
        rec.values.resize(n);
        in.read(reinterpret_cast<char*>(rec.values.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw CheckpointMismatch("truncated checkpoint while reading data for " + id);
        if (!records.emplace(std::move(id), std::move(rec)).second) {
            throw CheckpointMismatch("duplicate parameter id in checkpoint");
        }
    }

    for (Parameter* p : params) {
        auto it = records.find(p->id);
        if (it == records.end()) {
            throw CheckpointMismatch("checkpoint is missing parameter: " + p->id);
        }
        if (it->second.shape != p->tensor.shape) {
            throw CheckpointMismatch("shape mismatch for parameter: " + p->id);
        }
        p->tensor.values = std::move(it->second.values);
    }
}

}  // namespace rasa
