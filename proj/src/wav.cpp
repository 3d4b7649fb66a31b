#include "msnn/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "msnn/errors.hpp"

namespace msnn {

namespace {

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("wav: truncated chunk header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint16_t read_u16_le(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    if (!in) throw FormatError("wav: truncated field");
    return std::uint16_t(b[0] | (b[1] << 8));
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16_le(std::ostream& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v),
                                static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

} // namespace

AudioSample load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("wav: cannot open " + path);

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw FormatError("wav: missing RIFF tag in " + path);
    read_u32_le(in); // riff size, unused
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw FormatError("wav: missing WAVE tag in " + path);

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<std::int16_t> raw;

    while (in.read(tag, 4)) {
        const std::uint32_t size = read_u32_le(in);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError("wav: fmt chunk too small in " + path);
            format = read_u16_le(in);
            channels = read_u16_le(in);
            rate = read_u32_le(in);
            read_u32_le(in); // byte rate
            read_u16_le(in); // block align
            bits = read_u16_le(in);
            in.ignore(size - 16);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("wav: data chunk before fmt in " + path);
            if (format != 1) throw UnsupportedFormat("wav: only PCM encoding supported: " + path);
            if (bits != 16) throw UnsupportedFormat("wav: only 16-bit samples supported: " + path);
            if (channels != 1 && channels != 2)
                throw UnsupportedFormat("wav: only mono/stereo supported: " + path);
            raw.resize(size / 2);
            in.read(reinterpret_cast<char*>(raw.data()), size / 2 * 2);
            if (static_cast<std::uint32_t>(in.gcount()) != size / 2 * 2)
                throw TruncationError("wav: data chunk shorter than declared in " + path);
            break;
        } else {
            in.ignore(size + (size & 1)); // chunks are word-aligned
        }
    }
    if (!have_fmt) throw FormatError("wav: no fmt chunk in " + path);
    if (rate == 0) throw FormatError("wav: zero sample rate in " + path);

    AudioSample out;
    out.sample_rate = static_cast<int>(rate);
    if (channels == 1) {
        out.samples.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            out.samples[i] = float(raw[i]) / 32768.0f;
    } else {
        out.samples.resize(raw.size() / 2);
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
            const float l = float(raw[2 * i]) / 32768.0f;
            const float r = float(raw[2 * i + 1]) / 32768.0f;
            out.samples[i] = 0.5f * (l + r);
        }
    }
    return out;
}

void write_wav(const std::string& path, const AudioSample& audio) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("wav: cannot write " + path);

    const std::uint32_t n = std::uint32_t(audio.samples.size());
    const std::uint32_t data_bytes = n * 2;
    out.write("RIFF", 4);
    write_u32_le(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32_le(out, 16);
    write_u16_le(out, 1); // PCM
    write_u16_le(out, 1); // mono
    write_u32_le(out, std::uint32_t(audio.sample_rate));
    write_u32_le(out, std::uint32_t(audio.sample_rate) * 2);
    write_u16_le(out, 2);
    write_u16_le(out, 16);
    out.write("data", 4);
    write_u32_le(out, data_bytes);
    // Quantization mirrors the loader's /32768 so grid values round-trip
    // bit-exactly.
    for (float v : audio.samples) {
        v = v < -1.0f ? -1.0f : (v > 1.0f ? 1.0f : v);
        auto q = static_cast<std::int32_t>(std::lround(double(v) * 32768.0));
        if (q > 32767) q = 32767;
        if (q < -32768) q = -32768;
        const auto s = static_cast<std::int16_t>(q);
        out.write(reinterpret_cast<const char*>(&s), 2);
    }
}

} // namespace msnn
