#pragma once

#include <Eigen/Dense>

#include "msnn/idx.hpp"
#include "msnn/rng.hpp"
#include "msnn/wav.hpp"

namespace msnn {

struct EncoderConfig {
    int T = 28;            // simulation window, timesteps
    int mfcc_coeffs = 28;  // cepstral coefficients kept per frame
    int fft_window = 512;  // analysis window, samples
    int fft_hop = 256;     // frame hop, samples
    int mel_filters = 40;  // triangular filterbank size
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Binary (time x channels) tensor; the network's signal currency.
struct SpikeTrain {
    Eigen::MatrixXf data; // T x C, entries exactly 0 or 1

    int T() const { return static_cast<int>(data.rows()); }
    int channels() const { return static_cast<int>(data.cols()); }
};

// MFCC features resampled to the simulation window, each coefficient column
// min-max normalized into [0, 1].
struct Spectrogram {
    Eigen::MatrixXf frames; // T x F
};

// Rate coding: spike[t][c] = 1 iff u < pixel[c], drawn per timestep.
// Draw order is row-major over (t, c), so a given (image, config, seed)
// triple is bit-reproducible.
SpikeTrain encode_image_bernoulli(const ImageSample& img, const EncoderConfig& cfg, Rng& rng);

// Same sampling over an already-normalized spectrogram; values outside [0, 1]
// are rejected.
SpikeTrain encode_spectrogram(const Spectrogram& spec, const EncoderConfig& cfg, Rng& rng);

// Raw MFCC frames (frames x F), before time resampling and normalization.
// Pipeline: pre-emphasis 0.97, Hamming window, zero-padded power FFT,
// triangular mel filterbank over [0, sr/2], log with 1e-10 floor,
// orthonormal DCT-II.
Eigen::MatrixXd mfcc_frames(const AudioSample& audio, const EncoderConfig& cfg);

// Full auditory front end: mfcc_frames, linear resampling along time to
// exactly T rows, then per-column min-max normalization (zero-range columns
// map to 0).
Spectrogram compute_mfcc(const AudioSample& audio, const EncoderConfig& cfg);

// Helpers exposed for tests.
Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& m, int target_rows);
Eigen::MatrixXf minmax_normalize_columns(const Eigen::MatrixXd& m);

} // namespace msnn
