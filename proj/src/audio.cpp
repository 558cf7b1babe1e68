// RIFF/WAVE reader/writer and linear resampler.

#include "voxid/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace voxid {
namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

double decode_sample(const std::uint8_t* p, std::uint16_t format, std::uint16_t bits) {
    if (format == 3) {  // IEEE float
        float f;
        std::memcpy(&f, p, 4);
        return std::clamp(static_cast<double>(f), -1.0, 1.0);
    }
    switch (bits) {
        case 8:  // unsigned, midpoint 128
            return (static_cast<int>(p[0]) - 128) / 128.0;
        case 16: {
            const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            return v / 32768.0;
        }
        case 24: {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v |= ~0xFFFFFF;  // sign-extend
            return v / 8388608.0;
        }
        case 32: {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            return v / 2147483648.0;
        }
        default:
            throw AudioError(AudioErrorKind::UnsupportedCodec,
                             "unsupported PCM bit depth: " + std::to_string(bits));
    }
}

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw AudioError(AudioErrorKind::FileNotFound,
                         "cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw AudioError(AudioErrorKind::BadFormat,
                         "not a RIFF/WAVE file: " + path.string());

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = read_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size())
            throw AudioError(AudioErrorKind::BadFormat,
                             "truncated chunk in: " + path.string());
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16)
                throw AudioError(AudioErrorKind::BadFormat, "fmt chunk too small");
            format = read_u16(bytes.data() + pos);
            channels = read_u16(bytes.data() + pos + 2);
            sample_rate = read_u32(bytes.data() + pos + 4);
            bits = read_u16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = size;
        }
        pos += size + (size & 1);  // chunks are word-aligned
    }

    if (!have_fmt)
        throw AudioError(AudioErrorKind::BadFormat, "missing fmt chunk");
    if (data == nullptr)
        throw AudioError(AudioErrorKind::BadFormat, "missing data chunk");
    if (format != 1 && format != 3)
        throw AudioError(AudioErrorKind::UnsupportedCodec,
                         "compressed WAVE (format tag " + std::to_string(format) +
                             ") is not supported");
    if (format == 3 && bits != 32)
        throw AudioError(AudioErrorKind::UnsupportedCodec,
                         "only 32-bit float WAVE is supported");
    if (channels == 0 || sample_rate == 0)
        throw AudioError(AudioErrorKind::BadFormat, "invalid fmt parameters");

    const std::size_t bytes_per_sample = bits / 8;
    if (bytes_per_sample == 0)
        throw AudioError(AudioErrorKind::BadFormat, "invalid bit depth");
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t n_frames = data_size / frame_bytes;

    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.resize(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c)
            acc += decode_sample(data + f * frame_bytes + c * bytes_per_sample,
                                 format, bits);
        out.samples[f] = std::clamp(acc / channels, -1.0, 1.0);
    }
    return out;
}

void write_wav_16bit(const std::filesystem::path& path, const AudioBuffer& buf) {
    const std::uint32_t n = static_cast<std::uint32_t>(buf.samples.size());
    const std::uint32_t data_size = n * 2;
    std::vector<std::uint8_t> bytes(44 + data_size);

    auto put_u32 = [&](std::size_t at, std::uint32_t v) {
        bytes[at] = v & 0xFF;
        bytes[at + 1] = (v >> 8) & 0xFF;
        bytes[at + 2] = (v >> 16) & 0xFF;
        bytes[at + 3] = (v >> 24) & 0xFF;
    };
    auto put_u16 = [&](std::size_t at, std::uint16_t v) {
        bytes[at] = v & 0xFF;
        bytes[at + 1] = (v >> 8) & 0xFF;
    };

    std::memcpy(bytes.data(), "RIFF", 4);
    put_u32(4, 36 + data_size);
    std::memcpy(bytes.data() + 8, "WAVE", 4);
    std::memcpy(bytes.data() + 12, "fmt ", 4);
    put_u32(16, 16);
    put_u16(20, 1);  // PCM
    put_u16(22, 1);  // mono
    put_u32(24, buf.sample_rate);
    put_u32(28, buf.sample_rate * 2);
    put_u16(32, 2);
    put_u16(34, 16);
    std::memcpy(bytes.data() + 36, "data", 4);
    put_u32(40, data_size);

    for (std::uint32_t i = 0; i < n; ++i) {
        const double x = std::clamp(buf.samples[i], -1.0, 1.0);
        const auto v = static_cast<std::int16_t>(std::lrint(x * 32767.0));
        put_u16(44 + 2 * i, static_cast<std::uint16_t>(v));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw AudioError(AudioErrorKind::FileNotFound,
                         "cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer resample_linear(const AudioBuffer& buf, std::uint32_t target_rate) {
    if (target_rate == 0) throw std::invalid_argument("target rate must be positive");
    if (buf.sample_rate == 0) throw std::invalid_argument("source rate must be positive");
    if (target_rate == buf.sample_rate) return buf;

    const std::size_t n = buf.samples.size();
    AudioBuffer out;
    out.sample_rate = target_rate;
    if (n == 0) return out;

    const auto out_len = static_cast<std::size_t>(std::llround(
        static_cast<double>(n) * target_rate / buf.sample_rate));
    out.samples.resize(out_len);
    const double step = static_cast<double>(buf.sample_rate) / target_rate;
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = i * step;
        std::size_t i0 = static_cast<std::size_t>(pos);
        if (i0 >= n - 1) {
            out.samples[i] = buf.samples[n - 1];
            continue;
        }
        const double frac = pos - static_cast<double>(i0);
        const double a = buf.samples[i0], b = buf.samples[i0 + 1];
        double y = a + (b - a) * frac;
        // interpolation is a convex combination; keep it that way in floats
        y = std::clamp(y, std::min(a, b), std::max(a, b));
        out.samples[i] = y;
    }
    return out;
}

}  // namespace voxid
