// MFCC feature chain: pre-emphasis, framing, Hamming window, radix-2 FFT
// power spectrum, mel filterbank, log, orthonormal DCT-II.

#include "voxid/mfcc.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace voxid {
namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double hz_from_mel(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> pre_emphasize(std::span<const double> x, double alpha) {
    if (alpha < 0.0 || alpha >= 1.0)
        throw std::invalid_argument("pre-emphasis coefficient must be in [0, 1)");
    std::vector<double> y(x.size());
    if (x.empty()) return y;
    y[0] = x[0];
    for (std::size_t n = 1; n < x.size(); ++n) y[n] = x[n] - alpha * x[n - 1];
    return y;
}

std::vector<std::vector<double>> frame_signal(std::span<const double> x,
                                              std::size_t frame_len,
                                              std::size_t hop) {
    if (frame_len < 1 || hop < 1)
        throw std::invalid_argument("frame length and hop must be >= 1");
    std::vector<std::vector<double>> frames;
    if (x.size() < frame_len) return frames;
    const std::size_t count = (x.size() - frame_len) / hop + 1;
    frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double* p = x.data() + i * hop;
        frames.emplace_back(p, p + frame_len);
    }
    return frames;
}

std::vector<double> hamming_window(std::span<const double> frame) {
    const std::size_t len = frame.size();
    if (len < 1) throw std::invalid_argument("empty frame");
    std::vector<double> y(len);
    for (std::size_t n = 0; n < len; ++n) {
        const double phase = len == 1 ? 0.0 : 2.0 * kPi * n / static_cast<double>(len - 1);
        y[n] = frame[n] * (0.54 - 0.46 * std::cos(phase));
    }
    return y;
}

std::vector<double> power_spectrum(std::span<const double> frame, int n_fft) {
    if (!is_power_of_two(n_fft))
        throw std::invalid_argument("n_fft must be a power of two");
    if (static_cast<std::size_t>(n_fft) < frame.size())
        throw std::invalid_argument("n_fft smaller than frame length");
    std::vector<std::complex<double>> a(static_cast<std::size_t>(n_fft));
    for (std::size_t i = 0; i < frame.size(); ++i) a[i] = frame[i];
    fft_inplace(a);
    std::vector<double> p(static_cast<std::size_t>(n_fft / 2 + 1));
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(a[k]) / n_fft;
    return p;
}

std::vector<double> MelFilterBank::apply(std::span<const double> spectrum) const {
    std::vector<double> energies(filters.size(), 0.0);
    for (std::size_t i = 0; i < filters.size(); ++i) {
        const MelFilter& f = filters[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < f.weights.size(); ++j)
            acc += f.weights[j] * spectrum[static_cast<std::size_t>(f.begin) + j];
        energies[i] = acc;
    }
    return energies;
}

MelFilterBank build_mel_filterbank(int n_filters, int n_fft, double sample_rate,
                                   double fmin, double fmax) {
    if (n_filters < 1) throw std::invalid_argument("need at least one filter");
    if (!is_power_of_two(n_fft))
        throw std::invalid_argument("n_fft must be a power of two");
    if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
        throw std::invalid_argument("need 0 <= fmin < fmax <= rate/2");

    const double mel_lo = mel_from_hz(fmin);
    const double mel_hi = mel_from_hz(fmax);
    std::vector<int> bins(static_cast<std::size_t>(n_filters) + 2);
    for (std::size_t p = 0; p < bins.size(); ++p) {
        const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(p) /
                                        static_cast<double>(n_filters + 1);
        const double hz = hz_from_mel(mel);
        bins[p] = static_cast<int>(std::lround(hz * n_fft / sample_rate));
    }
    for (std::size_t p = 1; p < bins.size(); ++p)
        if (bins[p] <= bins[p - 1])
            throw std::invalid_argument(
                "mel points collapse onto one FFT bin; fewer filters or a larger "
                "n_fft is needed");

    MelFilterBank bank;
    bank.n_fft = n_fft;
    bank.sample_rate = sample_rate;
    bank.filters.resize(static_cast<std::size_t>(n_filters));
    for (int i = 0; i < n_filters; ++i) {
        const int lo = bins[static_cast<std::size_t>(i)];
        const int mid = bins[static_cast<std::size_t>(i) + 1];
        const int hi = bins[static_cast<std::size_t>(i) + 2];
        MelFilter f;
        f.begin = lo;
        f.peak_bin = mid;
        f.center_hz = static_cast<double>(mid) * sample_rate / n_fft;
        f.weights.assign(static_cast<std::size_t>(hi - lo) + 1, 0.0);
        for (int k = lo; k <= hi; ++k) {
            double w;
            if (k < mid)
                w = static_cast<double>(k - lo) / (mid - lo);
            else if (k == mid)
                w = 1.0;
            else
                w = static_cast<double>(hi - k) / (hi - mid);
            f.weights[static_cast<std::size_t>(k - lo)] = w;
        }
        bank.filters[static_cast<std::size_t>(i)] = std::move(f);
    }
    return bank;
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> c(n, 0.0);
    if (n == 0) return c;
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sk = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(kPi * (2.0 * i + 1.0) * k / (2.0 * n));
        c[k] = (k == 0 ? s0 : sk) * acc;
    }
    return c;
}

std::vector<double> idct2_orthonormal(std::span<const double> c) {
    const std::size_t n = c.size();
    std::vector<double> x(n, 0.0);
    if (n == 0) return x;
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sk = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            acc += (k == 0 ? s0 : sk) * c[k] *
                   std::cos(kPi * (2.0 * i + 1.0) * k / (2.0 * n));
        x[i] = acc;
    }
    return x;
}

std::vector<double> log_mel_energies(std::span<const double> spectrum,
                                     const MelFilterBank& bank, double floor) {
    std::vector<double> e = bank.apply(spectrum);
    for (double& v : e) v = std::log(std::max(v, floor));
    return e;
}

FeatureMatrix extract_mfcc(const AudioBuffer& buf, const MfccConfig& cfg) {
    if (buf.sample_rate == 0) throw std::invalid_argument("buffer has no sample rate");
    for (double v : buf.samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite sample in input audio");

    const auto frame_len = static_cast<std::size_t>(
        std::lround(cfg.frame_len_ms * buf.sample_rate / 1000.0));
    const auto hop =
        static_cast<std::size_t>(std::lround(cfg.hop_ms * buf.sample_rate / 1000.0));
    if (frame_len < 1 || hop < 1)
        throw std::invalid_argument("frame or hop rounds to zero samples");
    if (hop > frame_len)
        throw std::invalid_argument("hop must not exceed the frame length");
    if (static_cast<std::size_t>(cfg.n_fft) < frame_len)
        throw std::invalid_argument("n_fft smaller than the frame length");
    if (cfg.n_coeffs < 1 || cfg.n_coeffs > cfg.n_mels)
        throw std::invalid_argument("need 1 <= n_coeffs <= n_mels");

    const std::vector<double> emphasized = pre_emphasize(buf.samples, cfg.preemphasis);
    const auto frames = frame_signal(emphasized, frame_len, hop);
    if (frames.empty())
        throw std::invalid_argument("audio too short for a single frame");

    const MelFilterBank bank = build_mel_filterbank(cfg.n_mels, cfg.n_fft,
                                                    buf.sample_rate, cfg.fmin, cfg.fmax);

    // Window taper and the retained DCT rows are frame-invariant.
    std::vector<double> taper(frame_len);
    for (std::size_t n = 0; n < frame_len; ++n) {
        const double phase =
            frame_len == 1 ? 0.0 : 2.0 * kPi * n / static_cast<double>(frame_len - 1);
        taper[n] = 0.54 - 0.46 * std::cos(phase);
    }
    const auto n_mels = static_cast<std::size_t>(cfg.n_mels);
    const auto n_coeffs = static_cast<std::size_t>(cfg.n_coeffs);
    const double sk = std::sqrt(2.0 / static_cast<double>(n_mels));
    std::vector<double> dct_rows(n_coeffs * n_mels);
    for (std::size_t d = 0; d < n_coeffs; ++d)
        for (std::size_t i = 0; i < n_mels; ++i)
            dct_rows[d * n_mels + i] =
                sk * std::cos(kPi * (2.0 * i + 1.0) * (d + 1.0) / (2.0 * n_mels));

    FeatureMatrix out(frames.size(), n_coeffs);
    std::vector<double> windowed(frame_len);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        for (std::size_t n = 0; n < frame_len; ++n)
            windowed[n] = frames[t][n] * taper[n];
        const auto spectrum = power_spectrum(windowed, cfg.n_fft);
        const auto log_e = log_mel_energies(spectrum, bank, kLogEnergyFloor);
        auto row = out.row(t);
        for (std::size_t d = 0; d < n_coeffs; ++d) {
            double acc = 0.0;
            const double* basis = dct_rows.data() + d * n_mels;
            for (std::size_t i = 0; i < n_mels; ++i) acc += basis[i] * log_e[i];
            row[d] = acc;
        }
    }
    return out;
}

}  // namespace voxid
