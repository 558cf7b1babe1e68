// Synthetic speaker corpus. Voices are small sets of "vowel" chords built
// from shared base patterns plus a per-speaker detune signature, so speakers
// occupy nearby but separated regions of cepstral space. A rejection loop on
// clean-vowel cepstra enforces a minimum pairwise speaker separation.

#include "voxid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "voxid/audio.hpp"
#include "voxid/mfcc.hpp"
#include "voxid/rng.hpp"

namespace voxid {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint32_t kRate = 16000;

constexpr std::uint64_t kTagBases = 1;
constexpr std::uint64_t kTagVoice = 2;
constexpr std::uint64_t kTagUtt = 3;

constexpr int kNumBases = 5;              // shared vowel prototypes per corpus
constexpr double kSpeakerDetune = 0.055;  // speaker's offset from the prototype
constexpr double kUtteranceJitter = 0.018;
constexpr double kSegmentJitter = 0.004;
constexpr double kAmpJitter = 0.25;
constexpr double kNoiseLevel = 0.035;  // relative to the tonal peak
constexpr double kSegmentSeconds = 0.3;
constexpr double kFadeSeconds = 0.01;
constexpr double kMinSpeakerSep = 4.0;  // cepstral distance, same-index vowels
constexpr double kMinBaseSep = 10.0;    // cepstral distance between prototypes
constexpr int kMaxRedraws = 80;

struct Formant {
    double freq = 0.0;
    double amp = 0.0;
};

using Vowel = std::vector<Formant>;

struct Voice {
    std::vector<Vowel> vowels;
};

// Mean cepstrum of a short clean rendition; the coordinate system in which
// speaker separation is enforced.
std::vector<double> vowel_cepstrum(const Vowel& vowel) {
    const std::size_t n = kRate / 2;
    AudioBuffer buf;
    buf.sample_rate = kRate;
    buf.samples.resize(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kRate;
        double acc = 0.0;
        for (const Formant& f : vowel) acc += f.amp * std::sin(2.0 * kPi * f.freq * t);
        buf.samples[i] = acc;
        peak = std::max(peak, std::abs(acc));
    }
    if (peak > 0.0)
        for (double& s : buf.samples) s *= 0.6 / peak;

    const FeatureMatrix feats = extract_mfcc(buf, MfccConfig{});
    std::vector<double> mean(feats.dim(), 0.0);
    for (std::size_t t = 0; t < feats.rows(); ++t) {
        const auto row = feats.row(t);
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
    }
    for (double& v : mean) v /= static_cast<double>(feats.rows());
    return mean;
}

double cepstral_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

Vowel draw_base(Rng& rng) {
    Vowel v(3);
    v[0] = {rng.uniform(300.0, 850.0), 1.0};
    v[1] = {rng.uniform(950.0, 2200.0), rng.uniform(0.5, 0.75)};
    v[2] = {rng.uniform(2300.0, 3600.0), rng.uniform(0.25, 0.45)};
    return v;
}

// Prototype vowels shared by the whole corpus, drawn pairwise far apart so a
// speaker's own vowels stay distinct.
std::vector<Vowel> draw_bases(std::uint64_t seed) {
    Rng rng = Rng::stream(seed, kTagBases);
    std::vector<Vowel> bases;
    std::vector<std::vector<double>> cepstra;
    int tries = 0;
    while (static_cast<int>(bases.size()) < kNumBases) {
        const Vowel cand = draw_base(rng);
        const auto ceps = vowel_cepstrum(cand);
        bool ok = true;
        for (const auto& prev : cepstra)
            if (cepstral_distance(ceps, prev) < kMinBaseSep) {
                ok = false;
                break;
            }
        if (ok || ++tries > kMaxRedraws) {
            bases.push_back(cand);
            cepstra.push_back(ceps);
            tries = 0;
        }
    }
    return bases;
}

Voice detune_voice(const std::vector<Vowel>& bases, std::size_t n_vowels, Rng& rng) {
    Voice voice;
    voice.vowels.resize(n_vowels);
    for (std::size_t v = 0; v < n_vowels; ++v) {
        Vowel vowel = bases[v];
        for (Formant& f : vowel) {
            f.freq *= 1.0 + kSpeakerDetune * rng.uniform(-1.0, 1.0);
            f.amp *= 1.0 + kAmpJitter * rng.uniform(-1.0, 1.0);
        }
        voice.vowels[v] = vowel;
    }
    return voice;
}

// Draws a speaker; keeps redrawing while any of its vowels sits closer than
// kMinSpeakerSep to the same-index vowel of an earlier speaker. Falls back to
// the best candidate seen when the cap is reached, so generation always
// terminates (and stays deterministic).
Voice draw_voice(const std::vector<Vowel>& bases,
                 const std::vector<std::vector<std::vector<double>>>& others,
                 std::uint64_t seed, std::size_t speaker,
                 std::vector<std::vector<double>>* cepstra_out) {
    Rng rng = Rng::stream(seed, kTagVoice, speaker);
    const std::size_t n_vowels = 4 + rng.index(2);

    Voice best;
    std::vector<std::vector<double>> best_cepstra;
    double best_sep = -1.0;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        Voice cand = detune_voice(bases, n_vowels, rng);
        std::vector<std::vector<double>> cepstra(n_vowels);
        for (std::size_t v = 0; v < n_vowels; ++v)
            cepstra[v] = vowel_cepstrum(cand.vowels[v]);
        double sep = std::numeric_limits<double>::infinity();
        for (const auto& other : others)
            for (std::size_t v = 0; v < std::min(n_vowels, other.size()); ++v)
                sep = std::min(sep, cepstral_distance(cepstra[v], other[v]));
        if (sep > best_sep) {
            best_sep = sep;
            best = std::move(cand);
            best_cepstra = std::move(cepstra);
        }
        if (best_sep >= kMinSpeakerSep) break;
    }
    *cepstra_out = std::move(best_cepstra);
    return best;
}

AudioBuffer synth_utterance(const Voice& voice, std::uint64_t seed,
                            std::size_t speaker, std::size_t utterance,
                            bool is_train) {
    Rng rng = Rng::stream(seed, kTagUtt, speaker, utterance);
    const std::size_t n_vowels = voice.vowels.size();

    const double duration =
        is_train ? rng.uniform(7.5, 9.5) : rng.uniform(4.0, 10.0);

    // Training utterances rotate a two-vowel window through the repertoire;
    // test utterances pick three vowels at random.
    std::vector<std::size_t> subset;
    if (is_train) {
        subset = {(utterance + speaker) % n_vowels,
                  (utterance + speaker + 1) % n_vowels};
    } else {
        while (subset.size() < 3) {
            const std::size_t v = rng.index(n_vowels);
            if (std::find(subset.begin(), subset.end(), v) == subset.end())
                subset.push_back(v);
        }
    }

    // Utterance-level detune of each vowel in the subset.
    std::vector<Vowel> rendered(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        Vowel v = voice.vowels[subset[i]];
        for (Formant& f : v) {
            f.freq *= 1.0 + kUtteranceJitter * rng.uniform(-1.0, 1.0);
            f.amp *= 1.0 + kAmpJitter * rng.uniform(-1.0, 1.0);
        }
        rendered[i] = v;
    }

    const std::size_t n = static_cast<std::size_t>(std::lround(duration * kRate));
    const std::size_t seg_len = static_cast<std::size_t>(kSegmentSeconds * kRate);
    const std::size_t fade_len = static_cast<std::size_t>(kFadeSeconds * kRate);

    std::vector<double> tonal(n, 0.0);
    double peak = 0.0;
    for (std::size_t seg_start = 0, seg = 0; seg_start < n; seg_start += seg_len, ++seg) {
        const Vowel& base = rendered[seg % rendered.size()];
        const std::size_t len = std::min(seg_len, n - seg_start);

        Vowel v = base;
        std::vector<double> phase(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j].freq *= 1.0 + kSegmentJitter * rng.uniform(-1.0, 1.0);
            phase[j] = rng.uniform(0.0, 2.0 * kPi);
        }
        const double am_freq = rng.uniform(2.0, 4.0);
        const double am_phase = rng.uniform(0.0, 2.0 * kPi);

        for (std::size_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(i) / kRate;
            double acc = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j)
                acc += v[j].amp * std::sin(2.0 * kPi * v[j].freq * t + phase[j]);
            acc *= 1.0 + 0.3 * std::sin(2.0 * kPi * am_freq * t + am_phase);
            double fade = 1.0;
            if (i < fade_len) fade = static_cast<double>(i) / fade_len;
            if (len - 1 - i < fade_len)
                fade = std::min(fade, static_cast<double>(len - 1 - i) / fade_len);
            const double s = acc * fade;
            tonal[seg_start + i] = s;
            peak = std::max(peak, std::abs(s));
        }
    }

    AudioBuffer buf;
    buf.sample_rate = kRate;
    buf.samples.resize(n);
    const double scale = peak > 0.0 ? 0.6 / peak : 0.0;
    const double noise_amp = 0.6 * kNoiseLevel;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = tonal[i] * scale + noise_amp * rng.uniform(-1.0, 1.0);
        buf.samples[i] = std::clamp(s, -1.0, 1.0);
    }
    return buf;
}

}  // namespace

std::filesystem::path synth_corpus(const std::filesystem::path& out_dir,
                                   int n_speakers, int utterances_per_speaker,
                                   std::uint64_t seed) {
    if (n_speakers < 1) throw std::invalid_argument("need at least one speaker");
    if (utterances_per_speaker < 1)
        throw std::invalid_argument("need at least one utterance per speaker");

    std::filesystem::create_directories(out_dir);

    const std::vector<Vowel> bases = draw_bases(seed);
    std::vector<std::vector<std::vector<double>>> all_cepstra;
    std::vector<Voice> voices;
    for (int s = 0; s < n_speakers; ++s) {
        std::vector<std::vector<double>> cepstra;
        voices.push_back(draw_voice(bases, all_cepstra, seed,
                                    static_cast<std::size_t>(s), &cepstra));
        all_cepstra.push_back(std::move(cepstra));
    }

    const int n_train = std::max(1, utterances_per_speaker * 8 / 10);

    std::string manifest;
    for (int s = 0; s < n_speakers; ++s) {
        char speaker_id[16];
        std::snprintf(speaker_id, sizeof(speaker_id), "spk%02d", s + 1);
        for (int u = 0; u < utterances_per_speaker; ++u) {
            const bool is_train = u < n_train;
            const AudioBuffer buf =
                synth_utterance(voices[static_cast<std::size_t>(s)], seed,
                                static_cast<std::size_t>(s),
                                static_cast<std::size_t>(u), is_train);
            char name[32];
            std::snprintf(name, sizeof(name), "spk%02d_utt%02d.wav", s + 1, u + 1);
            write_wav_16bit(out_dir / name, buf);
            manifest += speaker_id;
            manifest += '\t';
            manifest += is_train ? "train" : "test";
            manifest += '\t';
            manifest += name;
            manifest += '\n';
        }
    }

    const std::filesystem::path manifest_path = out_dir / "manifest.tsv";
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::invalid_argument("cannot write manifest: " + manifest_path.string());
    out << manifest;
    return manifest_path;
}

}  // namespace voxid
