#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "voxid/mfcc.hpp"
#include "voxid/registry.hpp"

namespace voxid {

// Every experiment knob in one place. Serialized as a flat key = value file
// using exactly these field names; unknown keys are rejected.
struct EngineConfig {
    MfccConfig mfcc;
    std::size_t vq_k = 16;
    std::size_t gmm_m = 4;
    int em_max_iter = 12;
    double em_tol = 1e-5;
    std::uint64_t seed = 42;
    std::uint32_t sample_rate = 16000;

    TrainConfig train_config() const {
        TrainConfig t;
        t.vq_k = vq_k;
        t.gmm_m = gmm_m;
        t.seed = seed;
        t.em_max_iter = em_max_iter;
        t.em_tol = em_tol;
        return t;
    }
};

EngineConfig parse_engine_config(std::string_view text);
EngineConfig load_engine_config(const std::filesystem::path& path);
std::string engine_config_to_string(const EngineConfig& cfg);
void save_engine_config(const EngineConfig& cfg, const std::filesystem::path& path);

}  // namespace voxid
