#pragma once

#include "ddtm/corpus.hpp"
#include "ddtm/model.hpp"
#include "ddtm/rng.hpp"

namespace ddtm {

// Planted thread-level regime: the thread bits are pinned to a pattern and the
// regime label becomes the thread's subreddit.
struct SynthRegime {
    std::string label;
    VectorXd thread_bits;  // F_t 0/1 pattern
};

enum class SynthSampler { exact_enumeration, gibbs };

struct SynthOptions {
    int num_threads = 100;
    uint64_t seed = 0;
    SynthSampler sampler = SynthSampler::gibbs;
    int gibbs_burnin = 50;
    double log2_limit = 20.0;  // bit-space budget for exact enumeration
    std::vector<SynthRegime> regimes;  // empty = sample thread bits freely
    double test_fraction = 0.15;
    std::string subreddit = "synth";
};

// Sample threads from the model: exact enumeration of the hidden bits on small
// state spaces, block Gibbs with burn-in otherwise. Deterministic given the
// seed. Upvotes and deleted-child flags are planted from seeded linear
// functions of the sampled comment bits so downstream predictors have signal.
Corpus synth_corpus(const ModelParams& params, const std::vector<ThreadShape>& shapes,
                    const SynthOptions& opts);

// Tokens "w00000", "w00001", ... for synthetic vocabularies.
std::vector<std::string> synthetic_tokens(int vocab);

ThreadShape chain_shape(int comments, int64_t words_per_comment);
ThreadShape star_shape(int comments, int64_t words_per_comment);
// random attachment tree with uniform lengths in [min_words, max_words]
ThreadShape random_tree_shape(int comments, int64_t min_words, int64_t max_words, Rng& rng);

// Generator presets for synthetic corpora.
//   uniform:    all parameters zero; words are uniform noise.
//   coupled:    strong parent->child coupling plus thread-level emissions, so
//               reply structure carries real signal.
//   two_regime: two planted thread-level regimes emitting from opposite vocab
//               halves (labels "regime_a" / "regime_b").
ModelParams synth_preset_params(const std::string& preset, int vocab, int comment_bits,
                                int thread_bits, uint64_t seed);
std::vector<SynthRegime> two_regime_patterns(int thread_bits);

}  // namespace ddtm
