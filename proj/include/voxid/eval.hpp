#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "voxid/config.hpp"
#include "voxid/registry.hpp"

namespace voxid {

struct ManifestEntry {
    std::string speaker_id;
    bool is_train = false;
    std::filesystem::path wav_path;  // resolved against the manifest directory
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;
};

// One line per utterance: <speaker_id>\t<train|test>\t<wav_path>.
Manifest load_manifest(const std::filesystem::path& path);

struct GridPoint {
    Backend backend = Backend::Vq;
    std::size_t k_or_m = 16;   // K for VQ, M for GMM
    int iterations = 100;      // k-means iterations for VQ, EM iterations for GMM
    double train_cap_s = 0.0;  // 0 = use all training data
};

struct TrialOutcome {
    std::string true_speaker;
    std::string predicted;
    std::vector<std::pair<std::string, double>> ranked;
};

struct EvalRow {
    Backend backend = Backend::Vq;
    std::size_t k_or_m = 0;
    int iterations = 0;
    double train_seconds = 0.0;  // mean training audio actually used per speaker
    double test_seconds = 0.0;   // mean test utterance length
    std::size_t trials = 0;
    std::size_t correct = 0;
    double identification_rate = 0.0;  // 100 * correct / trials
    std::vector<TrialOutcome> outcomes;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

// Trains every speaker and scores every held-out utterance for each grid
// point; rows come back in grid order. Work is spread over `threads` workers
// (0 = hardware concurrency); results do not depend on the thread count.
EvalReport evaluate_grid(const Manifest& manifest,
                         const std::vector<GridPoint>& grid,
                         const EngineConfig& cfg, int threads = 0);

std::string report_to_csv(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace voxid
