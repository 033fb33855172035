#pragma once

#include <optional>

#include "ddtm/corpus.hpp"
#include "ddtm/model.hpp"
#include "ddtm/rng.hpp"

namespace ddtm {

// Block Gibbs sampler over the joint (x, h) of one thread shape. The inverse
// temperature beta scales only the interaction terms (U, V, W); biases stay at
// full strength, so beta = 0 is the tractable base model and beta = 1 the full
// model. Within a block the conditional factorizes exactly: comment bits given
// neighbors/words, thread bits given all words, each word position given bits.
class GibbsSampler {
public:
    GibbsSampler(const ThreadShape& shape, const ModelParams& params);

    void set_beta(double beta) { beta_ = beta; }
    double beta() const { return beta_; }

    // Pin the thread bits to a fixed pattern (planted-regime generation);
    // resample_thread_bits becomes a no-op.
    void clamp_thread_bits(const VectorXd& pattern) { thread_clamp_ = pattern; }

    // Exact independent draw from the beta = 0 base model.
    void init_from_base(Rng& rng);

    // One full scan: all words given bits, each comment block in index order,
    // then the thread block.
    void sweep(Rng& rng);
    void sweep(Rng& rng, int count);

    void resample_words(int n, Rng& rng);
    void resample_comment_bits(int n, Rng& rng);
    void resample_thread_bits(Rng& rng);

    // Current block conditionals, exposed for goodness-of-fit checks.
    VectorXd word_distribution(int n) const;   // K simplex
    VectorXd comment_bit_probs(int n) const;   // per-bit Bernoulli means
    VectorXd thread_bit_probs() const;

    // Interaction part of the energy at the current state:
    // sum_n h_n'U x_n + h0'V x_n + sum_edges h_p' W h_c.
    double interaction_energy() const;

    const MatrixXd& counts() const { return counts_; }  // K x N
    const MatrixXd& comment_bits() const { return h_; } // F_c x N
    const VectorXd& thread_bits() const { return h0_; }
    const ThreadShape& shape() const { return shape_; }

    // Closed-form log normalizer of the base model.
    static double base_log_z(const ThreadShape& shape, const ModelParams& params);

private:
    VectorXd comment_bias_pre(int n) const;

    ThreadShape shape_;
    const ModelParams& params_;
    std::vector<std::vector<int>> children_;
    double beta_ = 1.0;
    MatrixXd counts_;  // K x N word counts
    MatrixXd h_;       // F_c x N, 0/1
    VectorXd h0_;      // F_t, 0/1
    std::optional<VectorXd> thread_clamp_;
};

}  // namespace ddtm
