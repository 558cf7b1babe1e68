#pragma once

#include <cstdint>
#include <filesystem>

namespace voxid {

// Generates a reproducible synthetic speaker corpus: 16 kHz 16-bit mono WAV
// files plus a tab-separated train/test manifest (80/20 split per speaker).
// Each speaker is a pinned-seed set of 4-5 formant-like sinusoid mixtures
// ("vowels"); utterances sequence a subset of them with per-utterance jitter,
// slow amplitude modulation and additive noise. Training utterances rotate
// through the vowel set so longer training spans cover more of a speaker's
// repertoire; test utterances draw their subset at random.
//
// Returns the manifest path (out_dir/manifest.tsv). The same arguments always
// produce byte-identical files.
std::filesystem::path synth_corpus(const std::filesystem::path& out_dir,
                                   int n_speakers, int utterances_per_speaker,
                                   std::uint64_t seed);

}  // namespace voxid
