#pragma once

#include <cstdint>
#include <string>

#include "msnn/idx.hpp"
#include "msnn/rng.hpp"
#include "msnn/wav.hpp"

namespace msnn {

// Procedural digit corpora for demos and self-contained experiments, written
// through the regular IDX/WAV interfaces.
//
// Images are jittered seven-segment glyphs on a 28x28 canvas. Utterances are
// ordered two-tone chords: each digit is a (first tone, second tone) pair and
// digits d and d+5 share the same tone set in opposite order, so telling them
// apart requires the temporal order, not just the spectrum.

ImageSample synth_digit_image(int label, Rng& rng);
AudioSample synth_digit_audio(int label, Rng& rng, int sample_rate = 8000);

// Writes `count` images round-robin over the ten classes.
void make_visual_corpus(const std::string& images_path, const std::string& labels_path,
                        int count, std::uint64_t seed);

// Writes `per_class` files per digit named `<label>_<id>.wav`.
void make_audio_corpus(const std::string& dir, int per_class, std::uint64_t seed,
                       int sample_rate = 8000);

} // namespace msnn
