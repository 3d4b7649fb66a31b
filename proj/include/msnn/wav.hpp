#pragma once

#include <string>
#include <vector>

namespace msnn {

// One utterance, amplitudes normalized into [-1, 1].
struct AudioSample {
    std::vector<float> samples;
    int sample_rate = 0;
    int label = 0; // 0..9
};

// Reads 16-bit PCM RIFF/WAVE, mono or stereo (stereo is averaged to mono).
AudioSample load_wav(const std::string& path);

// Writes mono 16-bit PCM; amplitudes outside [-1, 1] are clamped.
void write_wav(const std::string& path, const AudioSample& audio);

} // namespace msnn
