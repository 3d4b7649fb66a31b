#include <doctest.h>

#include <cstring>
#include <fstream>

#include "msnn/errors.hpp"
#include "msnn/wav.hpp"
#include "test_support.hpp"

using namespace msnn;
using msnn_test::TempDir;

namespace {

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) b.push_back(static_cast<unsigned char>(v >> s));
}
void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

std::vector<unsigned char> wav_bytes(std::uint16_t format, std::uint16_t channels,
                                     std::uint32_t rate, std::uint16_t bits,
                                     const std::vector<std::int16_t>& samples) {
    std::vector<unsigned char> b;
    const std::uint32_t data_bytes = std::uint32_t(samples.size()) * 2;
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    put_u32(b, 36 + data_bytes);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(b, 16);
    put_u16(b, format);
    put_u16(b, channels);
    put_u32(b, rate);
    put_u32(b, rate * channels * bits / 8);
    put_u16(b, std::uint16_t(channels * bits / 8));
    put_u16(b, bits);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    put_u32(b, data_bytes);
    for (std::int16_t s : samples) put_u16(b, std::uint16_t(s));
    return b;
}

void write_raw(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("wav: one second of silence at 20 kHz") {
    TempDir tmp("wav");
    write_raw(tmp.file("silence.wav"),
              wav_bytes(1, 1, 20000, 16, std::vector<std::int16_t>(20000, 0)));
    const AudioSample a = load_wav(tmp.file("silence.wav"));
    CHECK(a.sample_rate == 20000);
    REQUIRE(a.samples.size() == 20000);
    for (float v : a.samples) CHECK(v == 0.0f);
}

TEST_CASE("wav: single sample 32767 normalizes to just under 1") {
    TempDir tmp("wav");
    write_raw(tmp.file("max.wav"), wav_bytes(1, 1, 8000, 16, {32767}));
    const AudioSample a = load_wav(tmp.file("max.wav"));
    REQUIRE(a.samples.size() == 1);
    CHECK(a.samples[0] == doctest::Approx(0.99997).epsilon(1e-4));
}

TEST_CASE("wav: stereo channels (0.5, -0.5) average to silence") {
    TempDir tmp("wav");
    write_raw(tmp.file("stereo.wav"), wav_bytes(1, 2, 8000, 16, {16384, -16384, 16384, -16384}));
    const AudioSample a = load_wav(tmp.file("stereo.wav"));
    REQUIRE(a.samples.size() == 2);
    CHECK(a.samples[0] == 0.0f);
    CHECK(a.samples[1] == 0.0f);
}

TEST_CASE("wav: non-PCM encoding raises UnsupportedFormat") {
    TempDir tmp("wav");
    write_raw(tmp.file("float.wav"), wav_bytes(3, 1, 8000, 16, {0}));
    CHECK_THROWS_AS(load_wav(tmp.file("float.wav")), UnsupportedFormat);
}

TEST_CASE("wav: corrupt header raises FormatError") {
    TempDir tmp("wav");
    write_raw(tmp.file("bad.wav"), {'R', 'I', 'F', 'X', 0, 0, 0, 0});
    CHECK_THROWS_AS(load_wav(tmp.file("bad.wav")), FormatError);
}

TEST_CASE("wav: writer/reader round trip is exact on the 16-bit grid") {
    TempDir tmp("wav");
    AudioSample src;
    src.sample_rate = 8000;
    for (int i = -8; i <= 8; ++i) src.samples.push_back(float(i * 1024) / 32768.0f);
    write_wav(tmp.file("rt.wav"), src);
    const AudioSample back = load_wav(tmp.file("rt.wav"));
    CHECK(back.sample_rate == src.sample_rate);
    REQUIRE(back.samples.size() == src.samples.size());
    for (std::size_t i = 0; i < src.samples.size(); ++i) CHECK(back.samples[i] == src.samples[i]);
}
