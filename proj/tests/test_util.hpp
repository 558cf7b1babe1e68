#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "voxid/feature_matrix.hpp"
#include "voxid/rng.hpp"

namespace test_util {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        dir_ = std::filesystem::temp_directory_path() /
               ("voxid-test-" + tag + "-" + std::to_string(++counter) + "-" +
                std::to_string(static_cast<unsigned>(::getpid())));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

inline void write_bytes(const std::filesystem::path& p,
                        const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

// Minimal WAV byte builder for fixtures.
class WavBuilder {
public:
    WavBuilder(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
               std::uint16_t bits)
        : format_(format), channels_(channels), rate_(rate), bits_(bits) {}

    WavBuilder& pcm16(std::initializer_list<std::int16_t> samples) {
        for (std::int16_t s : samples) {
            data_.push_back(static_cast<std::uint8_t>(s & 0xFF));
            data_.push_back(static_cast<std::uint8_t>((s >> 8) & 0xFF));
        }
        return *this;
    }
    WavBuilder& pcm16_n(std::size_t n, std::int16_t value) {
        for (std::size_t i = 0; i < n; ++i) pcm16({value});
        return *this;
    }
    WavBuilder& pcm8(std::initializer_list<std::uint8_t> samples) {
        data_.insert(data_.end(), samples.begin(), samples.end());
        return *this;
    }
    WavBuilder& pcm24(std::initializer_list<std::int32_t> samples) {
        for (std::int32_t s : samples) {
            data_.push_back(static_cast<std::uint8_t>(s & 0xFF));
            data_.push_back(static_cast<std::uint8_t>((s >> 8) & 0xFF));
            data_.push_back(static_cast<std::uint8_t>((s >> 16) & 0xFF));
        }
        return *this;
    }
    WavBuilder& pcm32(std::initializer_list<std::int32_t> samples) {
        for (std::int32_t s : samples) put_u32(data_, static_cast<std::uint32_t>(s));
        return *this;
    }
    WavBuilder& f32(std::initializer_list<float> samples) {
        for (float s : samples) {
            std::uint32_t bits;
            std::memcpy(&bits, &s, 4);
            put_u32(data_, bits);
        }
        return *this;
    }
    // Extra chunk before fmt/data, to exercise skipping.
    WavBuilder& junk_chunk(std::size_t size) {
        junk_.assign(size, 0x55);
        return *this;
    }

    std::vector<std::uint8_t> bytes() const {
        std::vector<std::uint8_t> out;
        const std::uint32_t junk_total =
            junk_.empty() ? 0
                          : 8 + static_cast<std::uint32_t>(junk_.size()) +
                                (junk_.size() & 1);
        const std::uint32_t riff_size =
            4 + junk_total + 24 + 8 + static_cast<std::uint32_t>(data_.size());
        append(out, "RIFF");
        put_u32(out, riff_size);
        append(out, "WAVE");
        if (!junk_.empty()) {
            append(out, "LIST");
            put_u32(out, static_cast<std::uint32_t>(junk_.size()));
            out.insert(out.end(), junk_.begin(), junk_.end());
            if (junk_.size() & 1) out.push_back(0);
        }
        append(out, "fmt ");
        put_u32(out, 16);
        put_u16(out, format_);
        put_u16(out, channels_);
        put_u32(out, rate_);
        put_u32(out, rate_ * channels_ * bits_ / 8);
        put_u16(out, static_cast<std::uint16_t>(channels_ * bits_ / 8));
        put_u16(out, bits_);
        append(out, "data");
        put_u32(out, static_cast<std::uint32_t>(data_.size()));
        out.insert(out.end(), data_.begin(), data_.end());
        if (data_.size() & 1) out.push_back(0);
        return out;
    }

    std::filesystem::path write(const std::filesystem::path& p) const {
        write_bytes(p, bytes());
        return p;
    }

private:
    static void append(std::vector<std::uint8_t>& v, const char* s) {
        v.insert(v.end(), s, s + 4);
    }
    static void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
        v.push_back(x & 0xFF);
        v.push_back((x >> 8) & 0xFF);
    }
    static void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
        for (int i = 0; i < 4; ++i) v.push_back((x >> (8 * i)) & 0xFF);
    }

    std::uint16_t format_, channels_;
    std::uint32_t rate_;
    std::uint16_t bits_;
    std::vector<std::uint8_t> data_;
    std::vector<std::uint8_t> junk_;
};

inline voxid::FeatureMatrix random_features(std::size_t rows, std::size_t dim,
                                            std::uint64_t seed, double lo = -3.0,
                                            double hi = 3.0) {
    voxid::Rng rng(seed);
    voxid::FeatureMatrix m(rows, dim);
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t d = 0; d < dim; ++d) m.at(t, d) = rng.uniform(lo, hi);
    return m;
}

}  // namespace test_util
