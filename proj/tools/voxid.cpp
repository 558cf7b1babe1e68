// voxid: speaker enrollment, identification and evaluation from the command
// line. Exit codes: 0 success/accept, 1 usage error, 2 data error, 3 open-set
// reject.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxid/audio.hpp"
#include "voxid/config.hpp"
#include "voxid/eval.hpp"
#include "voxid/mfcc.hpp"
#include "voxid/registry.hpp"
#include "voxid/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitReject = 3;

struct CommonOpts {
    std::string registry_path;
    std::string config_path;
    std::optional<std::size_t> k;
    std::optional<std::size_t> m;
    std::optional<int> iters;
    std::optional<std::uint64_t> seed;
};

voxid::EngineConfig resolve_config(const CommonOpts& opts) {
    voxid::EngineConfig cfg;
    if (!opts.config_path.empty()) cfg = voxid::load_engine_config(opts.config_path);
    if (opts.k) cfg.vq_k = *opts.k;
    if (opts.m) cfg.gmm_m = *opts.m;
    if (opts.iters) cfg.em_max_iter = *opts.iters;
    if (opts.seed) cfg.seed = *opts.seed;
    return cfg;
}

voxid::FeatureMatrix features_from_wav(const std::string& path,
                                       const voxid::EngineConfig& cfg) {
    voxid::AudioBuffer buf = voxid::load_wav(path);
    if (buf.sample_rate != cfg.sample_rate)
        buf = voxid::resample_linear(buf, cfg.sample_rate);
    return voxid::extract_mfcc(buf, cfg.mfcc);
}

voxid::Registry load_or_create_registry(const std::string& path, std::size_t dim) {
    if (std::filesystem::exists(path)) return voxid::load_registry(path);
    return voxid::Registry(dim);
}

int run_enroll(const CommonOpts& opts, const std::string& speaker_id,
               const std::vector<std::string>& wavs) {
    const voxid::EngineConfig cfg = resolve_config(opts);
    voxid::Registry registry =
        load_or_create_registry(opts.registry_path, static_cast<std::size_t>(cfg.mfcc.n_coeffs));

    voxid::FeatureMatrix features;
    for (const std::string& wav : wavs) {
        try {
            features.append(features_from_wav(wav, cfg));
        } catch (const std::exception& e) {
            std::cerr << wav << ": " << e.what() << "\n";
            return kExitData;
        }
    }

    const voxid::EnrollResult result =
        registry.enroll(speaker_id, features, cfg.train_config());
    voxid::save_registry(registry, opts.registry_path);

    std::cout << "enrolled " << speaker_id << ": +" << result.frames_added
              << " frames (" << result.total_frames << " total), codebook "
              << (result.codebook_trained ? "trained" : "absent") << ", gmm "
              << (result.gmm_trained ? "trained" : "absent") << "\n";
    if (result.status == voxid::EnrollStatus::InsufficientData) {
        std::cerr << "insufficient data: " << result.total_frames
                  << " frames accumulated, need " << cfg.vq_k << " for K and "
                  << cfg.gmm_m << " for M\n";
        return kExitData;
    }
    return kExitOk;
}

int run_identify(const CommonOpts& opts, const std::string& wav,
                 const std::string& backend_name, std::optional<double> threshold) {
    const voxid::EngineConfig cfg = resolve_config(opts);
    const voxid::Registry registry = voxid::load_registry(opts.registry_path);
    const voxid::Backend backend = voxid::backend_from_name(backend_name);

    const voxid::FeatureMatrix features = features_from_wav(wav, cfg);
    const voxid::IdentificationResult result =
        registry.identify(features, backend, threshold);
    for (const auto& [id, score] : result.ranked_scores)
        std::printf("%s\t%.6f\n", id.c_str(), score);
    std::printf("decision: %s\n", result.decision.c_str());
    return result.accepted ? kExitOk : kExitReject;
}

int run_evaluate(const CommonOpts& opts, const std::string& manifest_path,
                 const std::vector<std::string>& backends,
                 std::vector<std::size_t> ks, std::vector<std::size_t> ms,
                 std::vector<int> iters, std::vector<double> caps,
                 const std::string& csv_path, int threads) {
    const voxid::EngineConfig cfg = resolve_config(opts);
    const voxid::Manifest manifest = voxid::load_manifest(manifest_path);

    if (ks.empty()) ks = {cfg.vq_k};
    if (ms.empty()) ms = {cfg.gmm_m};
    if (caps.empty()) caps = {0.0};

    std::vector<voxid::GridPoint> grid;
    for (const std::string& backend : backends) {
        const voxid::Backend b = voxid::backend_from_name(backend);
        const auto& sizes = b == voxid::Backend::Vq ? ks : ms;
        std::vector<int> its = iters;
        if (its.empty()) its = {b == voxid::Backend::Vq ? 100 : cfg.em_max_iter};
        for (const std::size_t size : sizes)
            for (const int it : its)
                for (const double cap : caps)
                    grid.push_back({b, size, it, cap});
    }

    const voxid::EvalReport report = voxid::evaluate_grid(manifest, grid, cfg, threads);
    std::cout << voxid::report_to_table(report);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            std::cerr << "cannot write CSV: " << csv_path << "\n";
            return kExitData;
        }
        out << voxid::report_to_csv(report);
    }
    return kExitOk;
}

int run_inspect(const CommonOpts& opts, const std::string& json_path) {
    const voxid::Registry registry = voxid::load_registry(opts.registry_path);
    std::cout << "feature dim: " << registry.feature_dim() << "\n"
              << "speakers: " << registry.size() << "\n";
    for (const std::string& id : registry.speaker_ids()) {
        const auto rec = registry.find(id);
        std::cout << "  " << id << ": " << rec->accumulated_features.rows()
                  << " frames";
        if (rec->codebook) std::cout << ", codebook K=" << rec->codebook->k();
        if (rec->gmm) std::cout << ", gmm M=" << rec->gmm->m();
        std::cout << "\n";
    }
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            std::cerr << "cannot write JSON: " << json_path << "\n";
            return kExitData;
        }
        out << voxid::registry_to_json(registry);
        std::cout << "wrote " << json_path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxid - text-independent speaker identification"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto add_common = [&](CLI::App* cmd, bool registry_required) {
        auto* reg = cmd->add_option("--registry", opts.registry_path, "registry file");
        if (registry_required) reg->required();
        cmd->add_option("--config", opts.config_path, "engine config file");
        cmd->add_option("--k", opts.k, "VQ codebook size");
        cmd->add_option("--m", opts.m, "GMM component count");
        cmd->add_option("--iters", opts.iters, "training iterations");
        cmd->add_option("--seed", opts.seed, "PRNG seed");
    };
    auto add_config_seed = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "engine config file");
        cmd->add_option("--seed", opts.seed, "PRNG seed");
    };

    // enroll
    std::string speaker_id;
    std::vector<std::string> wavs;
    CLI::App* enroll = app.add_subcommand("enroll", "add utterances for a speaker");
    add_common(enroll, true);
    enroll->add_option("speaker_id", speaker_id, "speaker name")->required();
    enroll->add_option("wavs", wavs, "WAV files")->required()->expected(-1);

    // identify
    std::string test_wav, backend = "gmm";
    std::optional<double> threshold;
    CLI::App* identify = app.add_subcommand("identify", "identify the speaker of a WAV");
    add_common(identify, true);
    identify->add_option("--backend", backend, "vq or gmm")
        ->check(CLI::IsMember({"vq", "gmm"}));
    identify->add_option("--threshold", threshold,
                         "open-set acceptance threshold (distortion for vq, "
                         "average log-likelihood for gmm)");
    identify->add_option("wav", test_wav, "WAV file to identify")->required();

    // evaluate
    std::string manifest_path, csv_path;
    std::vector<std::string> eval_backends;
    std::vector<std::size_t> ks, ms;
    std::vector<int> iters;
    std::vector<double> caps;
    int threads = 0;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "closed-set identification sweep over a corpus");
    add_config_seed(evaluate);
    evaluate->add_option("manifest", manifest_path, "corpus manifest")->required();
    evaluate->add_option("--backend", eval_backends, "backends to sweep (vq, gmm)")
        ->check(CLI::IsMember({"vq", "gmm"}));
    evaluate->add_option("--k", ks, "VQ codebook sizes to sweep");
    evaluate->add_option("--m", ms, "GMM component counts to sweep");
    evaluate->add_option("--iters", iters, "iteration counts to sweep");
    evaluate->add_option("--train-cap", caps, "training duration caps in seconds");
    evaluate->add_option("--csv", csv_path, "write the report as CSV");
    evaluate->add_option("--threads", threads, "worker threads (0 = auto)");

    // synth-corpus
    std::string out_dir;
    int n_speakers = 8, utterances = 10;
    std::uint64_t synth_seed = 42;
    CLI::App* synth =
        app.add_subcommand("synth-corpus", "generate a synthetic labeled corpus");
    synth->add_option("out_dir", out_dir, "output directory")->required();
    synth->add_option("--speakers", n_speakers, "number of speakers");
    synth->add_option("--utterances", utterances, "utterances per speaker");
    synth->add_option("--seed", synth_seed, "PRNG seed");

    // inspect
    std::string json_path;
    CLI::App* inspect = app.add_subcommand("inspect", "list a registry's contents");
    add_common(inspect, true);
    inspect->add_option("--json", json_path, "also dump the registry as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (enroll->parsed()) return run_enroll(opts, speaker_id, wavs);
        if (identify->parsed()) return run_identify(opts, test_wav, backend, threshold);
        if (evaluate->parsed()) {
            std::vector<std::string> backends = eval_backends;
            if (backends.empty()) backends = {"vq", "gmm"};
            return run_evaluate(opts, manifest_path, backends, ks, ms, iters, caps,
                                csv_path, threads);
        }
        if (synth->parsed()) {
            const auto manifest =
                voxid::synth_corpus(out_dir, n_speakers, utterances, synth_seed);
            std::cout << manifest.string() << "\n";
            return kExitOk;
        }
        if (inspect->parsed()) return run_inspect(opts, json_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
