#pragma once

#include <span>
#include <vector>

#include "voxid/audio.hpp"
#include "voxid/feature_matrix.hpp"

namespace voxid {

// Front-end configuration. Frame and hop lengths are in milliseconds and are
// converted to samples against the buffer's rate when features are extracted.
struct MfccConfig {
    double frame_len_ms = 25.0;
    double hop_ms = 10.0;
    double preemphasis = 0.97;
    int n_fft = 512;
    int n_mels = 26;
    double fmin = 0.0;
    double fmax = 8000.0;
    int n_coeffs = 16;
};

// Filterbank energies below this are clamped before the log so silent frames
// stay finite.
inline constexpr double kLogEnergyFloor = 1e-10;

// mel(f) = 2595 * log10(1 + f / 700)
double mel_from_hz(double hz);
double hz_from_mel(double mel);

// y[0] = x[0]; y[n] = x[n] - alpha * x[n-1]
std::vector<double> pre_emphasize(std::span<const double> x, double alpha);

// Frame i covers samples [i*hop, i*hop + frame_len). A trailing partial frame
// is dropped; too-short input yields no frames.
std::vector<std::vector<double>> frame_signal(std::span<const double> x,
                                              std::size_t frame_len,
                                              std::size_t hop);

// 0.54 - 0.46 * cos(2*pi*n / (L-1)); for L == 1 the 0/0 ratio is taken as 0.
std::vector<double> hamming_window(std::span<const double> frame);

// Zero-pads to n_fft (a power of two, >= frame length) and returns
// |FFT bin|^2 / n_fft for bins 0..n_fft/2.
std::vector<double> power_spectrum(std::span<const double> frame, int n_fft);

struct MelFilter {
    int begin = 0;                 // first spectral bin with nonzero weight
    std::vector<double> weights;   // triangle over [begin, begin + size)
    int peak_bin = 0;
    double center_hz = 0.0;
};

struct MelFilterBank {
    int n_fft = 0;
    double sample_rate = 0.0;
    std::vector<MelFilter> filters;

    std::vector<double> apply(std::span<const double> spectrum) const;
};

// n_filters + 2 points spaced evenly on the mel scale between fmin and fmax,
// converted to Hz and snapped to FFT bins (round(f * n_fft / rate)). Filter i
// is the triangle over points (i, i+1, i+2) with peak weight 1. Throws if two
// adjacent points land on the same bin.
MelFilterBank build_mel_filterbank(int n_filters, int n_fft, double sample_rate,
                                   double fmin, double fmax);

// Orthonormal DCT-II: c_k = s_k * sum_n x_n cos(pi*(2n+1)*k / (2N)),
// s_0 = sqrt(1/N), s_k = sqrt(2/N). idct applies the transpose.
std::vector<double> dct2_orthonormal(std::span<const double> x);
std::vector<double> idct2_orthonormal(std::span<const double> c);

// Per frame: pre-emphasis (whole signal), framing, Hamming window, power
// spectrum, filterbank energies, log with floor, DCT-II, coefficients
// 1..n_coeffs (c0 dropped). log_floor exists so tests can run the chain
// without flooring; extraction uses kLogEnergyFloor.
FeatureMatrix extract_mfcc(const AudioBuffer& buf, const MfccConfig& cfg);

// Log filterbank energies for one frame chain stage (shared by extract_mfcc
// and by diagnostics that look at pre-DCT energies).
std::vector<double> log_mel_energies(std::span<const double> spectrum,
                                     const MelFilterBank& bank, double floor);

}  // namespace voxid
