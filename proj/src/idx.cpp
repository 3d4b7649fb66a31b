#include "msnn/idx.hpp"

#include <cstdint>
#include <fstream>

#include "msnn/errors.hpp"

namespace msnn {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw TruncationError("idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("idx: cannot open " + path);
    return in;
}

} // namespace

std::vector<ImageSample> load_idx_images(const std::string& path) {
    std::ifstream in = open_binary(path);
    const std::uint32_t magic = read_u32_be(in);
    if (magic != kImageMagic) throw FormatError("idx: bad image magic in " + path);
    const std::uint32_t count = read_u32_be(in);
    const std::uint32_t rows = read_u32_be(in);
    const std::uint32_t cols = read_u32_be(in);

    const std::size_t payload = std::size_t(count) * rows * cols;
    std::vector<unsigned char> bytes(payload);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(payload));
    if (static_cast<std::size_t>(in.gcount()) != payload)
        throw TruncationError("idx: image payload shorter than header declares in " + path);

    std::vector<ImageSample> out(count);
    std::size_t k = 0;
    for (std::uint32_t n = 0; n < count; ++n) {
        ImageSample& s = out[n];
        s.pixels.resize(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c)
                s.pixels(r, c) = float(bytes[k++]) / 255.0f;
    }
    return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream in = open_binary(path);
    const std::uint32_t magic = read_u32_be(in);
    if (magic != kLabelMagic) throw FormatError("idx: bad label magic in " + path);
    const std::uint32_t count = read_u32_be(in);

    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        throw TruncationError("idx: label payload shorter than header declares in " + path);

    std::vector<int> labels(count);
    for (std::uint32_t n = 0; n < count; ++n) {
        if (bytes[n] > 9)
            throw RangeError("idx: label byte " + std::to_string(int(bytes[n])) + " out of 0..9");
        labels[n] = bytes[n];
    }
    return labels;
}

void write_idx_images(const std::string& path, const std::vector<ImageSample>& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("idx: cannot write " + path);
    const std::uint32_t rows = images.empty() ? 0 : std::uint32_t(images[0].pixels.rows());
    const std::uint32_t cols = images.empty() ? 0 : std::uint32_t(images[0].pixels.cols());
    write_u32_be(out, kImageMagic);
    write_u32_be(out, std::uint32_t(images.size()));
    write_u32_be(out, rows);
    write_u32_be(out, cols);
    for (const ImageSample& s : images) {
        if (std::uint32_t(s.pixels.rows()) != rows || std::uint32_t(s.pixels.cols()) != cols)
            throw ShapeError("idx: images in one file must share dimensions");
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) {
                float v = s.pixels(r, c);
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                out.put(static_cast<char>(static_cast<unsigned char>(v * 255.0f + 0.5f)));
            }
    }
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("idx: cannot write " + path);
    write_u32_be(out, kLabelMagic);
    write_u32_be(out, std::uint32_t(labels.size()));
    for (int l : labels) {
        if (l < 0 || l > 9) throw RangeError("idx: label out of 0..9");
        out.put(static_cast<char>(static_cast<unsigned char>(l)));
    }
}

} // namespace msnn
