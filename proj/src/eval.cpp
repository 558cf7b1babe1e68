// Closed-set evaluation over a labeled corpus manifest: per-speaker training,
// held-out scoring, identification-rate rows per grid point.

#include "voxid/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "voxid/audio.hpp"
#include "voxid/mfcc.hpp"

namespace voxid {
namespace {

// Index-addressed parallel loop. Each index is processed exactly once and
// workers only write to their own slots, so results match the serial order
// regardless of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned worker_count = threads > 0
                                ? static_cast<unsigned>(threads)
                                : std::max(1u, std::thread::hardware_concurrency());
    worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(n));
    if (worker_count <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (unsigned w = 0; w < worker_count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open manifest: " + path.string());

    Manifest manifest;
    manifest.base_dir = path.parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                    : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                        ": expected <speaker>\\t<split>\\t<path>");
        ManifestEntry entry;
        entry.speaker_id = line.substr(0, tab1);
        const std::string split = line.substr(tab1 + 1, tab2 - tab1 - 1);
        if (split == "train")
            entry.is_train = true;
        else if (split == "test")
            entry.is_train = false;
        else
            throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                        ": split must be train or test");
        std::filesystem::path wav = line.substr(tab2 + 1);
        if (wav.is_relative()) wav = manifest.base_dir / wav;
        entry.wav_path = std::move(wav);
        if (entry.speaker_id.empty())
            throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                        ": empty speaker id");
        manifest.entries.push_back(std::move(entry));
    }
    if (manifest.entries.empty())
        throw std::invalid_argument("manifest has no entries: " + path.string());
    return manifest;
}

EvalReport evaluate_grid(const Manifest& manifest, const std::vector<GridPoint>& grid,
                         const EngineConfig& cfg, int threads) {
    const std::size_t n_entries = manifest.entries.size();

    // Features are extracted once per file and shared across grid points.
    std::vector<FeatureMatrix> features(n_entries);
    parallel_for(n_entries, threads, [&](std::size_t i) {
        AudioBuffer buf = load_wav(manifest.entries[i].wav_path);
        if (buf.sample_rate != cfg.sample_rate)
            buf = resample_linear(buf, cfg.sample_rate);
        features[i] = extract_mfcc(buf, cfg.mfcc);
    });

    std::map<std::string, std::vector<std::size_t>> train_by_speaker;
    std::vector<std::size_t> test_entries;
    for (std::size_t i = 0; i < n_entries; ++i) {
        const auto& e = manifest.entries[i];
        if (e.is_train)
            train_by_speaker[e.speaker_id].push_back(i);
        else
            test_entries.push_back(i);
    }
    std::map<std::string, bool> has_test;
    for (const std::size_t i : test_entries)
        has_test[manifest.entries[i].speaker_id] = true;
    for (const auto& [id, idx] : train_by_speaker)
        if (!has_test.count(id))
            throw std::invalid_argument("speaker has no test utterances: " + id);
    for (const auto& [id, flag] : has_test)
        if (!train_by_speaker.count(id))
            throw std::invalid_argument("speaker has no training utterances: " + id);

    std::vector<std::string> speakers;
    for (const auto& [id, idx] : train_by_speaker) speakers.push_back(id);
    const std::size_t n_speakers = speakers.size();
    const std::size_t n_grid = grid.size();

    // Per grid point and speaker: the training matrix, capped in frames.
    std::vector<FeatureMatrix> train_sets(n_grid * n_speakers);
    std::vector<std::map<std::string, Codebook>> books(n_grid);
    std::vector<std::map<std::string, GmmModel>> models(n_grid);
    for (std::size_t g = 0; g < n_grid; ++g) {
        const double cap = grid[g].train_cap_s;
        const std::size_t max_frames =
            cap > 0.0 ? static_cast<std::size_t>(std::floor(cap * 1000.0 / cfg.mfcc.hop_ms))
                      : std::numeric_limits<std::size_t>::max();
        for (std::size_t s = 0; s < n_speakers; ++s) {
            FeatureMatrix all;
            for (const std::size_t i : train_by_speaker[speakers[s]])
                all.append(features[i]);
            train_sets[g * n_speakers + s] = all.take_rows(max_frames);
        }
    }

    struct Fit {
        Codebook book;
        GmmModel gmm;
    };
    std::vector<Fit> fits(n_grid * n_speakers);
    parallel_for(n_grid * n_speakers, threads, [&](std::size_t job) {
        const std::size_t g = job / n_speakers;
        const FeatureMatrix& train = train_sets[job];
        if (grid[g].backend == Backend::Vq)
            fits[job].book =
                kmeans_fit(train, grid[g].k_or_m, cfg.seed, grid[g].iterations);
        else
            fits[job].gmm = em_fit(train, grid[g].k_or_m, cfg.seed,
                                   grid[g].iterations, cfg.em_tol)
                                .first;
    });
    for (std::size_t g = 0; g < n_grid; ++g)
        for (std::size_t s = 0; s < n_speakers; ++s) {
            if (grid[g].backend == Backend::Vq)
                books[g].emplace(speakers[s], std::move(fits[g * n_speakers + s].book));
            else
                models[g].emplace(speakers[s], std::move(fits[g * n_speakers + s].gmm));
        }

    std::vector<TrialOutcome> outcomes(n_grid * test_entries.size());
    parallel_for(outcomes.size(), threads, [&](std::size_t job) {
        const std::size_t g = job / test_entries.size();
        const std::size_t e = test_entries[job % test_entries.size()];
        TrialOutcome& out = outcomes[job];
        out.true_speaker = manifest.entries[e].speaker_id;
        if (grid[g].backend == Backend::Vq) {
            for (const auto& s : vq_identify(features[e], books[g]))
                out.ranked.emplace_back(s.speaker_id, s.distortion);
        } else {
            out.ranked = gmm_identify(features[e], models[g]);
        }
        out.predicted = out.ranked.front().first;
    });

    EvalReport report;
    report.rows.resize(n_grid);
    for (std::size_t g = 0; g < n_grid; ++g) {
        EvalRow& row = report.rows[g];
        row.backend = grid[g].backend;
        row.k_or_m = grid[g].k_or_m;
        row.iterations = grid[g].iterations;

        double train_frames = 0.0;
        for (std::size_t s = 0; s < n_speakers; ++s)
            train_frames += static_cast<double>(train_sets[g * n_speakers + s].rows());
        row.train_seconds =
            train_frames / static_cast<double>(n_speakers) * cfg.mfcc.hop_ms / 1000.0;

        double test_frames = 0.0;
        for (const std::size_t e : test_entries)
            test_frames += static_cast<double>(features[e].rows());
        row.test_seconds = test_entries.empty()
                               ? 0.0
                               : test_frames / static_cast<double>(test_entries.size()) *
                                     cfg.mfcc.hop_ms / 1000.0;

        row.trials = test_entries.size();
        row.outcomes.assign(outcomes.begin() + static_cast<std::ptrdiff_t>(g * row.trials),
                            outcomes.begin() +
                                static_cast<std::ptrdiff_t>((g + 1) * row.trials));
        for (const TrialOutcome& o : row.outcomes)
            if (o.predicted == o.true_speaker) ++row.correct;
        row.identification_rate =
            row.trials == 0 ? 0.0
                            : 100.0 * static_cast<double>(row.correct) /
                                  static_cast<double>(row.trials);
    }
    return report;
}

std::string report_to_csv(const EvalReport& report) {
    std::string out =
        "backend,k_or_m,iterations,train_seconds,test_seconds,trials,correct,"
        "identification_rate\n";
    char line[256];
    for (const EvalRow& row : report.rows) {
        std::snprintf(line, sizeof(line), "%s,%zu,%d,%.2f,%.2f,%zu,%zu,%.4f\n",
                      backend_name(row.backend).c_str(), row.k_or_m, row.iterations,
                      row.train_seconds, row.test_seconds, row.trials, row.correct,
                      row.identification_rate);
        out += line;
    }
    return out;
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-8s %-6s %-6s %-10s %-10s %-7s %-8s %s\n",
                  "backend", "k_or_m", "iters", "train_sec", "test_sec", "trials",
                  "correct", "id_rate_%");
    out << line;
    for (const EvalRow& row : report.rows) {
        std::snprintf(line, sizeof(line),
                      "%-8s %-6zu %-6d %-10.2f %-10.2f %-7zu %-8zu %.4f\n",
                      backend_name(row.backend).c_str(), row.k_or_m, row.iterations,
                      row.train_seconds, row.test_seconds, row.trials, row.correct,
                      row.identification_rate);
        out << line;
    }
    return out.str();
}

}  // namespace voxid
