#include "msnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "msnn/errors.hpp"

namespace msnn {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'N', 'N'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw CheckpointError("checkpoint truncated");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw CheckpointError("checkpoint truncated");
    return s;
}

void put_f32_le(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

float get_f32_le(std::istream& in) {
    const std::uint32_t bits = get_u32(in);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

} // namespace

void Checkpoint::add_tensor(const std::string& name, const Eigen::MatrixXf& m) {
    tensors.emplace_back(name, m);
}

const Eigen::MatrixXf* Checkpoint::find_tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return &m;
    return nullptr;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_string(out, config_json);
    put_u64(out, rng_seed);
    out.put(static_cast<char>(sign_orientation));

    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) put_f32_le(out, m(r, c));
    }

    put_u32(out, static_cast<std::uint32_t>(mask.n()));
    if (mask.n() > 0) {
        put_u32(out, static_cast<std::uint32_t>(mask.edge_count()));
        for (int i = 0; i < mask.n(); ++i)
            for (int j = 0; j < mask.n(); ++j)
                if (i != j && mask.adj(i, j) != 0.0f) {
                    put_u32(out, static_cast<std::uint32_t>(i));
                    put_u32(out, static_cast<std::uint32_t>(j));
                }
    }
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("not a checkpoint file: " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    ck.config_json = get_string(in);
    ck.rng_seed = get_u64(in);
    const int sign = in.get();
    if (sign == EOF) throw CheckpointError("checkpoint truncated");
    ck.sign_orientation = static_cast<std::int8_t>(static_cast<signed char>(sign));

    const std::uint32_t n_tensors = get_u32(in);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = get_string(in);
        const std::uint32_t rows = get_u32(in);
        const std::uint32_t cols = get_u32(in);
        Eigen::MatrixXf m(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = get_f32_le(in);
        ck.tensors.emplace_back(name, std::move(m));
    }

    const std::uint32_t mask_n = get_u32(in);
    ck.mask = MotifMask::zeros(static_cast<int>(mask_n));
    if (mask_n > 0) {
        const std::uint32_t edges = get_u32(in);
        for (std::uint32_t e = 0; e < edges; ++e) {
            const std::uint32_t i = get_u32(in);
            const std::uint32_t j = get_u32(in);
            if (i >= mask_n || j >= mask_n || i == j)
                throw CheckpointError("checkpoint mask edge out of range");
            ck.mask.adj(static_cast<int>(i), static_cast<int>(j)) = 1.0f;
        }
    }
    return ck;
}

} // namespace msnn
