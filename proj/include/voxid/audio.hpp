#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace voxid {

// Mono PCM samples in [-1, 1] at a known rate.
struct AudioBuffer {
    std::vector<double> samples;
    std::uint32_t sample_rate = 0;

    double duration_s() const {
        return sample_rate == 0
                   ? 0.0
                   : static_cast<double>(samples.size()) / sample_rate;
    }
};

enum class AudioErrorKind {
    FileNotFound,
    BadFormat,         // broken RIFF/WAVE structure
    UnsupportedCodec,  // compression other than integer PCM / 32-bit float
};

class AudioError : public std::runtime_error {
public:
    AudioError(AudioErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    AudioErrorKind kind() const { return kind_; }

private:
    AudioErrorKind kind_;
};

// Reads a RIFF/WAVE file holding integer PCM (8/16/24/32-bit) or 32-bit float
// samples. Multi-channel input is averaged to mono; integer samples are scaled
// to [-1, 1] by the type's maximum magnitude (e.g. 32768 for 16-bit).
AudioBuffer load_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] and scaled by 32767.
void write_wav_16bit(const std::filesystem::path& path, const AudioBuffer& buf);

// Linear-interpolation resample. Output length is round(n * target / source);
// positions past the last input sample hold the edge value. Returns the input
// unchanged when the rates already match.
AudioBuffer resample_linear(const AudioBuffer& buf, std::uint32_t target_rate);

}  // namespace voxid
