// Speaker registry: enrollment with retrain-from-scratch, identification
// front-end over the VQ and GMM backends, and durable persistence.

#include "voxid/registry.hpp"

#include <array>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>

#include <json.hpp>

namespace voxid {
namespace {

constexpr std::array<char, 8> kMagic = {'V', 'O', 'X', 'I', 'D', '1', '\0', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int bit = 0; bit < 8; ++bit)
            c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = make_crc_table();
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xFF);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) bytes_.push_back((bits >> (8 * i)) & 0xFF);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void doubles(const std::vector<double>& v) {
        for (double d : v) f64(d);
    }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
        pos_ += len;
        return s;
    }
    std::vector<double> doubles(std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = f64();
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > size_)
            throw RegistryIoError(RegistryIoErrorKind::Truncated,
                                  "registry file ends mid-record");
    }
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

std::string backend_name(Backend b) { return b == Backend::Vq ? "vq" : "gmm"; }

Backend backend_from_name(const std::string& name) {
    if (name == "vq") return Backend::Vq;
    if (name == "gmm") return Backend::Gmm;
    throw std::invalid_argument("unknown backend: " + name);
}

Registry::Registry(const Registry& other) {
    std::shared_lock lock(other.mutex_);
    feature_dim_ = other.feature_dim_;
    records_ = other.records_;
}

Registry& Registry::operator=(const Registry& other) {
    if (this == &other) return *this;
    Registry copy(other);
    std::unique_lock lock(mutex_);
    feature_dim_ = copy.feature_dim_;
    records_ = std::move(copy.records_);
    return *this;
}

EnrollResult Registry::enroll(const std::string& speaker_id,
                              const FeatureMatrix& features, const TrainConfig& cfg) {
    if (speaker_id.empty()) throw std::invalid_argument("speaker id must be non-empty");
    if (features.empty()) throw std::invalid_argument("no feature frames to enroll");
    if (features.dim() != feature_dim_)
        throw std::invalid_argument("feature dimension " + std::to_string(features.dim()) +
                                    " does not match registry dimension " +
                                    std::to_string(feature_dim_));

    std::unique_lock lock(mutex_);
    SpeakerRecord& rec = records_[speaker_id];
    rec.speaker_id = speaker_id;
    rec.accumulated_features.append(features);
    rec.enrolled_utterances += 1;

    EnrollResult result;
    result.frames_added = features.rows();
    result.total_frames = rec.accumulated_features.rows();

    // Retrain from scratch on the accumulated set so repeated enrollments
    // match a single enrollment of the concatenated features exactly.
    rec.codebook.reset();
    rec.gmm.reset();
    if (result.total_frames >= cfg.vq_k) {
        rec.codebook = kmeans_fit(rec.accumulated_features, cfg.vq_k, cfg.seed,
                                  cfg.kmeans_max_iter);
        result.codebook_trained = true;
    }
    if (result.total_frames >= cfg.gmm_m) {
        rec.gmm = em_fit(rec.accumulated_features, cfg.gmm_m, cfg.seed,
                         cfg.em_max_iter, cfg.em_tol)
                      .first;
        result.gmm_trained = true;
    }
    rec.last_trained = now_seconds();
    result.status = result.codebook_trained && result.gmm_trained
                        ? EnrollStatus::Ok
                        : EnrollStatus::InsufficientData;
    return result;
}

IdentificationResult Registry::identify(const FeatureMatrix& features, Backend backend,
                                        std::optional<double> threshold) const {
    std::shared_lock lock(mutex_);
    IdentificationResult result;
    result.backend = backend;

    if (backend == Backend::Vq) {
        std::map<std::string, Codebook> books;
        for (const auto& [id, rec] : records_)
            if (rec.codebook) books.emplace(id, *rec.codebook);
        if (books.empty())
            throw std::invalid_argument("no trained models for backend vq");
        for (const auto& s : vq_identify(features, books))
            result.ranked_scores.emplace_back(s.speaker_id, s.distortion);
        result.accepted = !threshold || result.ranked_scores.front().second <= *threshold;
    } else {
        std::map<std::string, GmmModel> models;
        for (const auto& [id, rec] : records_)
            if (rec.gmm) models.emplace(id, *rec.gmm);
        if (models.empty())
            throw std::invalid_argument("no trained models for backend gmm");
        result.ranked_scores = gmm_identify(features, models);
        result.accepted = !threshold || result.ranked_scores.front().second >= *threshold;
    }
    result.decision = result.accepted ? result.ranked_scores.front().first : "unknown";
    return result;
}

std::vector<std::string> Registry::speaker_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    ids.reserve(records_.size());
    for (const auto& [id, rec] : records_) ids.push_back(id);
    return ids;
}

std::optional<SpeakerRecord> Registry::find(const std::string& speaker_id) const {
    std::shared_lock lock(mutex_);
    const auto it = records_.find(speaker_id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::size_t Registry::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

void save_registry(const Registry& registry, const std::filesystem::path& path) {
    std::shared_lock lock(registry.mutex_);

    Writer w;
    for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(registry.feature_dim_));
    w.u32(static_cast<std::uint32_t>(registry.records_.size()));
    for (const auto& [id, rec] : registry.records_) {
        w.str(id);
        w.u32(static_cast<std::uint32_t>(rec.accumulated_features.rows()));
        w.doubles(rec.accumulated_features.data());
        std::uint8_t flags = 0;
        if (rec.codebook) flags |= 1;
        if (rec.gmm) flags |= 2;
        w.u8(flags);
        if (rec.codebook) {
            w.u32(static_cast<std::uint32_t>(rec.codebook->k()));
            w.doubles(rec.codebook->centroids.data());
        }
        if (rec.gmm) {
            w.u32(static_cast<std::uint32_t>(rec.gmm->m()));
            w.doubles(rec.gmm->weights);
            w.doubles(rec.gmm->means.data());
            w.doubles(rec.gmm->variances.data());
        }
    }
    const std::uint32_t crc = crc32(w.bytes().data(), w.bytes().size());
    w.u32(crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw RegistryIoError(RegistryIoErrorKind::WriteFailed,
                              "cannot write registry file: " + path.string());
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.bytes().size()));
    if (!out)
        throw RegistryIoError(RegistryIoErrorKind::WriteFailed,
                              "short write to registry file: " + path.string());
}

Registry load_registry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw RegistryIoError(RegistryIoErrorKind::Truncated,
                              "cannot open registry file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < kMagic.size() + 4)
        throw RegistryIoError(RegistryIoErrorKind::Truncated, "registry file too short");
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
        throw RegistryIoError(RegistryIoErrorKind::BadMagic,
                              "not a registry file: " + path.string());

    Reader r(bytes.data(), bytes.size() - 4);  // body excludes the trailing CRC
    for (std::size_t i = 0; i < kMagic.size(); ++i) r.u8();
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw RegistryIoError(RegistryIoErrorKind::VersionMismatch,
                              "registry format version " + std::to_string(version) +
                                  ", expected " + std::to_string(kFormatVersion));

    const std::uint32_t dim = r.u32();
    const std::uint32_t count = r.u32();
    Registry registry(dim);
    for (std::uint32_t s = 0; s < count; ++s) {
        SpeakerRecord rec;
        rec.speaker_id = r.str();
        const std::uint32_t frames = r.u32();
        FeatureMatrix feats(frames, dim);
        feats.data() = r.doubles(static_cast<std::size_t>(frames) * dim);
        rec.accumulated_features = std::move(feats);
        rec.enrolled_utterances = frames > 0 ? 1 : 0;
        const std::uint8_t flags = r.u8();
        if (flags & 1) {
            const std::uint32_t k = r.u32();
            Codebook book;
            book.centroids = FeatureMatrix(k, dim);
            book.centroids.data() = r.doubles(static_cast<std::size_t>(k) * dim);
            book.train_frames = frames;
            rec.codebook = std::move(book);
        }
        if (flags & 2) {
            const std::uint32_t m = r.u32();
            GmmModel gmm;
            gmm.weights = r.doubles(m);
            gmm.means = FeatureMatrix(m, dim);
            gmm.means.data() = r.doubles(static_cast<std::size_t>(m) * dim);
            gmm.variances = FeatureMatrix(m, dim);
            gmm.variances.data() = r.doubles(static_cast<std::size_t>(m) * dim);
            rec.gmm = std::move(gmm);
        }
        registry.records_.emplace(rec.speaker_id, std::move(rec));
    }
    if (r.pos() != bytes.size() - 4)
        throw RegistryIoError(RegistryIoErrorKind::Truncated,
                              "trailing bytes after the last record");

    const std::uint32_t stored = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                 (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                 (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                 (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
    const std::uint32_t computed = crc32(bytes.data(), bytes.size() - 4);
    if (stored != computed)
        throw RegistryIoError(RegistryIoErrorKind::ChecksumMismatch,
                              "registry checksum mismatch");
    return registry;
}

std::string registry_to_json(const Registry& registry, bool include_features) {
    std::shared_lock lock(registry.mutex_);
    nlohmann::json doc;
    doc["version"] = kFormatVersion;
    doc["feature_dim"] = registry.feature_dim_;
    doc["speakers"] = nlohmann::json::array();
    for (const auto& [id, rec] : registry.records_) {
        nlohmann::json s;
        s["name"] = id;
        s["frame_count"] = rec.accumulated_features.rows();
        if (include_features) {
            nlohmann::json rows = nlohmann::json::array();
            for (std::size_t t = 0; t < rec.accumulated_features.rows(); ++t) {
                const auto row = rec.accumulated_features.row(t);
                rows.push_back(std::vector<double>(row.begin(), row.end()));
            }
            s["features"] = std::move(rows);
        }
        if (rec.codebook) {
            nlohmann::json cb;
            cb["k"] = rec.codebook->k();
            nlohmann::json rows = nlohmann::json::array();
            for (std::size_t j = 0; j < rec.codebook->k(); ++j) {
                const auto row = rec.codebook->centroids.row(j);
                rows.push_back(std::vector<double>(row.begin(), row.end()));
            }
            cb["centroids"] = std::move(rows);
            s["codebook"] = std::move(cb);
        }
        if (rec.gmm) {
            nlohmann::json g;
            g["m"] = rec.gmm->m();
            g["weights"] = rec.gmm->weights;
            nlohmann::json means = nlohmann::json::array();
            nlohmann::json vars = nlohmann::json::array();
            for (std::size_t j = 0; j < rec.gmm->m(); ++j) {
                const auto mu = rec.gmm->means.row(j);
                const auto var = rec.gmm->variances.row(j);
                means.push_back(std::vector<double>(mu.begin(), mu.end()));
                vars.push_back(std::vector<double>(var.begin(), var.end()));
            }
            g["means"] = std::move(means);
            g["variances"] = std::move(vars);
            s["gmm"] = std::move(g);
        }
        doc["speakers"].push_back(std::move(s));
    }
    return doc.dump(2);
}

}  // namespace voxid
