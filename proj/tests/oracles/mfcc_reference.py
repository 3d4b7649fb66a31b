#!/usr/bin/env python3
"""Independent textbook MFCC used to freeze expected values for the C++ tests.

Pipeline: pre-emphasis 0.97, Hamming window, zero-padded power FFT,
triangular mel filterbank over [0, sr/2], log with 1e-10 floor, orthonormal
DCT-II. Regenerate the frozen header with:

    python3 tests/oracles/mfcc_reference.py > tests/mfcc_frozen.inc
"""

import numpy as np
from scipy.fft import dct

SR = 20000
WIN = 512
HOP = 256
N_MEL = 40
N_CEP = 28
FROZEN_FRAMES = (0, 40)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + f / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mfcc(signal, sr):
    x = signal.astype(np.float64)
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - 0.97 * x[:-1]

    nfft = 1
    while nfft < WIN:
        nfft *= 2
    n_bins = nfft // 2 + 1
    window = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(WIN) / (WIN - 1))

    edges_mel = np.linspace(0.0, hz_to_mel(sr / 2.0), N_MEL + 2)
    edges = mel_to_hz(edges_mel)
    freqs = np.arange(n_bins) * sr / nfft
    fbank = np.zeros((N_MEL, n_bins))
    for m in range(N_MEL):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        fbank[m] = np.clip(np.minimum(rising, falling), 0.0, None)

    n_frames = (len(y) - WIN) // HOP + 1
    out = np.zeros((n_frames, N_CEP))
    for f in range(n_frames):
        frame = y[f * HOP : f * HOP + WIN] * window
        power = np.abs(np.fft.rfft(frame, nfft)) ** 2
        mel_log = np.log(np.maximum(fbank @ power, 1e-10))
        out[f] = dct(mel_log, type=2, norm="ortho")[:N_CEP]
    return out


def main():
    n = np.arange(SR)
    signal = np.sin(2.0 * np.pi * 440.0 * n / SR).astype(np.float32)
    frames = mfcc(signal, SR)

    print("// Generated by tests/oracles/mfcc_reference.py; do not edit by hand.")
    print(f"// 440 Hz sine, 1 s at {SR} Hz; win={WIN} hop={HOP} mel={N_MEL} cep={N_CEP}.")
    print(f"constexpr int kFrozenFrameCount = {frames.shape[0]};")
    print(f"constexpr int kFrozenCoeffs = {N_CEP};")
    print(f"constexpr int kFrozenFrames[] = {{{', '.join(str(i) for i in FROZEN_FRAMES)}}};")
    print("constexpr double kFrozenMfcc[][%d] = {" % N_CEP)
    for idx in FROZEN_FRAMES:
        row = ", ".join(f"{v:.12e}" for v in frames[idx])
        print(f"    {{{row}}},")
    print("};")
    mean_abs = float(np.mean(np.abs(frames)))
    print(f"constexpr double kFrozenMeanAbs = {mean_abs:.12e};")


if __name__ == "__main__":
    main()
