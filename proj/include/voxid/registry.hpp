#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxid/feature_matrix.hpp"
#include "voxid/gmm.hpp"
#include "voxid/vq.hpp"

namespace voxid {

enum class Backend { Vq, Gmm };

std::string backend_name(Backend b);
Backend backend_from_name(const std::string& name);

struct TrainConfig {
    std::size_t vq_k = 16;
    std::size_t gmm_m = 4;
    std::uint64_t seed = 42;
    int kmeans_max_iter = 100;
    int em_max_iter = 12;
    double em_tol = 1e-5;
};

struct SpeakerRecord {
    std::string speaker_id;
    FeatureMatrix accumulated_features;
    std::optional<Codebook> codebook;
    std::optional<GmmModel> gmm;
    std::uint32_t enrolled_utterances = 0;
    std::int64_t last_trained = 0;  // unix seconds
};

enum class EnrollStatus { Ok, InsufficientData };

struct EnrollResult {
    EnrollStatus status = EnrollStatus::Ok;
    std::size_t frames_added = 0;
    std::size_t total_frames = 0;
    bool codebook_trained = false;
    bool gmm_trained = false;
};

struct IdentificationResult {
    std::string decision;  // speaker id, or "unknown" when rejected
    Backend backend = Backend::Vq;
    // VQ: ascending distortion. GMM: descending average log-likelihood.
    std::vector<std::pair<std::string, double>> ranked_scores;
    bool accepted = false;
};

// Enrolled speakers with their accumulated features and trained models.
// Single writer, many readers: enrollments serialize behind a write lock,
// identifications share a read lock.
class Registry {
public:
    explicit Registry(std::size_t feature_dim = 16) : feature_dim_(feature_dim) {}

    Registry(const Registry& other);
    Registry& operator=(const Registry& other);

    std::size_t feature_dim() const { return feature_dim_; }

    // Appends the features to the speaker's accumulated set (creating the
    // speaker if needed) and retrains both models from scratch on the full
    // set. A model whose K or M exceeds the accumulated frame count is left
    // absent and the call reports InsufficientData.
    EnrollResult enroll(const std::string& speaker_id, const FeatureMatrix& features,
                        const TrainConfig& cfg);

    // Closed-set decision is the backend's top rank. With a threshold the
    // test is open set: VQ accepts when the best distortion <= threshold,
    // GMM accepts when the best average log-likelihood >= threshold.
    IdentificationResult identify(const FeatureMatrix& features, Backend backend,
                                  std::optional<double> threshold = {}) const;

    std::vector<std::string> speaker_ids() const;
    std::optional<SpeakerRecord> find(const std::string& speaker_id) const;
    std::size_t size() const;

private:
    friend void save_registry(const Registry&, const std::filesystem::path&);
    friend Registry load_registry(const std::filesystem::path&);
    friend std::string registry_to_json(const Registry&, bool);

    std::size_t feature_dim_;
    std::map<std::string, SpeakerRecord> records_;
    mutable std::shared_mutex mutex_;
};

enum class RegistryIoErrorKind {
    BadMagic,
    VersionMismatch,
    ChecksumMismatch,
    Truncated,
    WriteFailed,
};

class RegistryIoError : public std::runtime_error {
public:
    RegistryIoError(RegistryIoErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    RegistryIoErrorKind kind() const { return kind_; }

private:
    RegistryIoErrorKind kind_;
};

// Binary little-endian container:
//   magic "VOXID1\0\0" | u32 version | u32 feature dim | u32 speaker count
//   per speaker: u32 name length + UTF-8 name
//                u32 frame count + row-major f64 features
//                u8 flags (bit 0 codebook, bit 1 gmm)
//                [u32 K + row-major f64 centroids]
//                [u32 M + f64 weights + f64 means + f64 variances]
//   u32 CRC-32 (IEEE 802.3, reflected 0xEDB88320) of all preceding bytes
void save_registry(const Registry& registry, const std::filesystem::path& path);
Registry load_registry(const std::filesystem::path& path);

// Human-readable mirror of the binary layout, for debugging. Only the binary
// format round-trips bit-exactly.
std::string registry_to_json(const Registry& registry, bool include_features = true);

}  // namespace voxid
