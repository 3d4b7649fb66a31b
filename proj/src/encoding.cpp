#include "msnn/encoding.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "msnn/errors.hpp"

namespace msnn {

namespace {

constexpr double kPreEmphasis = 0.97;
constexpr double kLogFloor = 1e-10;

// In-place iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / double(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = x[i + k];
                const std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Weight of filter m (1..n_mel) at frequency f, edges in Hz.
double tri_weight(double f, double lo, double mid, double hi) {
    if (f < lo || f > hi) return 0.0;
    if (f <= mid) return (mid == lo) ? 0.0 : (f - lo) / (mid - lo);
    return (hi == mid) ? 0.0 : (hi - f) / (hi - mid);
}

SpikeTrain sample_bernoulli(const Eigen::MatrixXf& probs_per_tick, int T, Rng& rng) {
    // probs_per_tick is T x C; each cell compared against a fresh uniform.
    SpikeTrain train;
    train.data.resize(T, probs_per_tick.cols());
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < probs_per_tick.cols(); ++c)
            train.data(t, c) = rng.uniform() < probs_per_tick(t, c) ? 1.0f : 0.0f;
    return train;
}

} // namespace

void EncoderConfig::validate() const {
    if (T < 1) throw ConfigError("encoder: T must be >= 1");
    if (mfcc_coeffs < 1) throw ConfigError("encoder: mfcc_coeffs must be >= 1");
    if (fft_hop < 1 || fft_window < fft_hop)
        throw ConfigError("encoder: need fft_window >= fft_hop >= 1");
    if (mel_filters < mfcc_coeffs)
        throw ConfigError("encoder: mel_filters must be >= mfcc_coeffs");
}

SpikeTrain encode_image_bernoulli(const ImageSample& img, const EncoderConfig& cfg, Rng& rng) {
    const auto c = static_cast<int>(img.pixels.size());
    Eigen::MatrixXf probs(cfg.T, c);
    // Pixels flatten row-major; the probability of a channel is constant
    // over the window.
    Eigen::VectorXf flat(c);
    int k = 0;
    for (int r = 0; r < img.pixels.rows(); ++r)
        for (int col = 0; col < img.pixels.cols(); ++col) flat(k++) = img.pixels(r, col);
    probs.rowwise() = flat.transpose();
    return sample_bernoulli(probs, cfg.T, rng);
}

SpikeTrain encode_spectrogram(const Spectrogram& spec, const EncoderConfig& cfg, Rng& rng) {
    if (spec.frames.rows() != cfg.T)
        throw ShapeError("spectrogram rows must equal T");
    if ((spec.frames.array() < 0.0f).any() || (spec.frames.array() > 1.0f).any())
        throw RangeError("spectrogram values must lie in [0, 1]");
    return sample_bernoulli(spec.frames, cfg.T, rng);
}

Eigen::MatrixXd mfcc_frames(const AudioSample& audio, const EncoderConfig& cfg) {
    cfg.validate();
    const int win = cfg.fft_window;
    const int hop = cfg.fft_hop;
    const auto n = static_cast<int>(audio.samples.size());
    if (n < win) throw TooShortError("audio shorter than one analysis window");
    if (audio.sample_rate <= 0) throw RangeError("audio sample rate must be positive");

    // Pre-emphasis over the whole signal.
    std::vector<double> y(n);
    y[0] = audio.samples[0];
    for (int i = 1; i < n; ++i)
        y[i] = double(audio.samples[i]) - kPreEmphasis * double(audio.samples[i - 1]);

    const int n_frames = (n - win) / hop + 1;
    const std::size_t nfft = next_pow2(static_cast<std::size_t>(win));
    const int n_bins = static_cast<int>(nfft / 2) + 1;
    const double sr = audio.sample_rate;

    std::vector<double> hamming(win);
    for (int i = 0; i < win; ++i)
        hamming[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / double(win - 1));

    // Triangular filterbank with edges equally spaced on the mel scale
    // between 0 and sr/2.
    const int n_mel = cfg.mel_filters;
    std::vector<double> edges(n_mel + 2);
    const double mel_hi = hz_to_mel(sr / 2.0);
    for (int m = 0; m < n_mel + 2; ++m) edges[m] = mel_to_hz(mel_hi * m / double(n_mel + 1));
    Eigen::MatrixXd fbank = Eigen::MatrixXd::Zero(n_mel, n_bins);
    for (int m = 0; m < n_mel; ++m)
        for (int k = 0; k < n_bins; ++k) {
            const double f = k * sr / double(nfft);
            fbank(m, k) = tri_weight(f, edges[m], edges[m + 1], edges[m + 2]);
        }

    // Orthonormal DCT-II basis, mel -> cepstral.
    const int n_cep = cfg.mfcc_coeffs;
    Eigen::MatrixXd dct(n_cep, n_mel);
    for (int c = 0; c < n_cep; ++c) {
        const double scale = std::sqrt((c == 0 ? 1.0 : 2.0) / double(n_mel));
        for (int m = 0; m < n_mel; ++m)
            dct(c, m) = scale * std::cos(M_PI * c * (2.0 * m + 1.0) / (2.0 * n_mel));
    }

    Eigen::MatrixXd out(n_frames, n_cep);
    std::vector<std::complex<double>> buf(nfft);
    Eigen::VectorXd power(n_bins), mel_log(n_mel);
    for (int f = 0; f < n_frames; ++f) {
        const int start = f * hop;
        for (std::size_t i = 0; i < nfft; ++i)
            buf[i] = (i < std::size_t(win)) ? std::complex<double>(y[start + i] * hamming[i], 0.0)
                                            : std::complex<double>(0.0, 0.0);
        fft_pow2(buf);
        for (int k = 0; k < n_bins; ++k) power(k) = std::norm(buf[k]);
        mel_log = (fbank * power).array().max(kLogFloor).log();
        out.row(f) = (dct * mel_log).transpose();
    }
    return out;
}

Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& m, int target_rows) {
    if (m.rows() == 0) throw ShapeError("cannot resample an empty matrix");
    Eigen::MatrixXd out(target_rows, m.cols());
    if (m.rows() == 1 || target_rows == 1) {
        for (int t = 0; t < target_rows; ++t) out.row(t) = m.row(0);
        return out;
    }
    const double step = double(m.rows() - 1) / double(target_rows - 1);
    for (int t = 0; t < target_rows; ++t) {
        const double pos = t * step;
        const auto i0 = static_cast<int>(pos);
        const int i1 = std::min<int>(i0 + 1, static_cast<int>(m.rows()) - 1);
        const double frac = pos - i0;
        out.row(t) = (1.0 - frac) * m.row(i0) + frac * m.row(i1);
    }
    return out;
}

Eigen::MatrixXf minmax_normalize_columns(const Eigen::MatrixXd& m) {
    Eigen::MatrixXf out(m.rows(), m.cols());
    for (int c = 0; c < m.cols(); ++c) {
        const double lo = m.col(c).minCoeff();
        const double hi = m.col(c).maxCoeff();
        const double range = hi - lo;
        if (range <= 0.0) {
            out.col(c).setZero();
        } else {
            out.col(c) = ((m.col(c).array() - lo) / range).cast<float>();
        }
    }
    return out;
}

Spectrogram compute_mfcc(const AudioSample& audio, const EncoderConfig& cfg) {
    const Eigen::MatrixXd raw = mfcc_frames(audio, cfg);
    const Eigen::MatrixXd resampled = resample_rows(raw, cfg.T);
    Spectrogram spec;
    spec.frames = minmax_normalize_columns(resampled);
    return spec;
}

} // namespace msnn
