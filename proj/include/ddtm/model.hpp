#pragma once

#include <cstdint>
#include <string>

#include "ddtm/common.hpp"
#include "ddtm/corpus.hpp"
#include "ddtm/rng.hpp"

namespace ddtm {

enum class Variant : uint32_t {
    ddtm = 0,
    ddtm_nocpl = 1,
    rs_comment = 2,
    rs_thread = 3,
    unigram = 4,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct HiddenConfig {
    int comment_bits = 32;  // F_c
    int thread_bits = 32;   // F_t
    Variant variant = Variant::ddtm;

    void validate() const;
};

// Which parameter blocks a variant trains; masked blocks are held at zero.
struct BlockMask {
    bool U = true, V = true, W = true;
    bool a = true, b = true, c = true;
    bool b_start = true, b_stop = true;
};

BlockMask variant_mask(Variant v);

// One value per model parameter. Shared layout for parameters, gradients and
// optimizer moments.
struct ParamBlocks {
    MatrixXd U;        // F_c x K, comment emission
    MatrixXd V;        // F_t x K, thread emission
    MatrixXd W;        // F_c x F_c, parent row -> child column coupling
    VectorXd a;        // K, word bias
    VectorXd b;        // F_c, comment-bit bias (scaled by D_n)
    VectorXd c;        // F_t, thread-bit bias (scaled by D_n)
    VectorXd b_start;  // F_c, comments with no parent
    VectorXd b_stop;   // F_c, comments with no children

    static ParamBlocks zeros(int vocab, int comment_bits, int thread_bits);

    int vocab_size() const { return static_cast<int>(a.size()); }
    int comment_bits() const { return static_cast<int>(b.size()); }
    int thread_bits() const { return static_cast<int>(c.size()); }

    bool all_finite() const;
    void setZero();
    void apply_mask(const BlockMask& m);

    // elementwise update helpers for the optimizer
    template <typename F>
    void for_each(F&& f) {
        f(U); f(V); f(W);
        f(a); f(b); f(c); f(b_start); f(b_stop);
    }
    template <typename F>
    static void zip(ParamBlocks& x, const ParamBlocks& y, F&& f) {
        f(x.U, y.U); f(x.V, y.V); f(x.W, y.W);
        f(x.a, y.a); f(x.b, y.b); f(x.c, y.c);
        f(x.b_start, y.b_start); f(x.b_stop, y.b_stop);
    }
    template <typename F>
    static void zip3(ParamBlocks& x, ParamBlocks& y, const ParamBlocks& z, F&& f) {
        f(x.U, y.U, z.U); f(x.V, y.V, z.V); f(x.W, y.W, z.W);
        f(x.a, y.a, z.a); f(x.b, y.b, z.b); f(x.c, y.c, z.c);
        f(x.b_start, y.b_start, z.b_start); f(x.b_stop, y.b_stop, z.b_stop);
    }
};

struct ModelParams {
    HiddenConfig cfg;
    ParamBlocks blocks;

    int vocab_size() const { return blocks.vocab_size(); }
    void validate(int vocab) const;
};

// Latent assignment for one thread: one bit vector per comment plus a single
// thread-level vector.
struct HiddenAssignment {
    Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> h;  // F_c x N, binary
    Eigen::Matrix<uint8_t, Eigen::Dynamic, 1> h0;              // F_t, binary
};

// Comment counts as a dense vector; helper for the sparse representation.
VectorXd dense_counts(const CommentBag& bag, int vocab);

// U * x_n for sparse counts.
VectorXd emission_times_counts(const MatrixXd& M, const CommentBag& bag);

// Unnormalized log-score of a full configuration:
//   sum_n [ h_n'U x_n + x_n'a + D_n h_n'b + h0'V x_n + D_n h0'c ]
// + sum_{(n,m) in replies} h_n'W h_m
// + b_start on parentless comments + b_stop on childless comments.
double energy(const Thread& thread, const HiddenAssignment& h, const ModelParams& params);

// Gaussian init for emissions (comment variance 1e-2, thread variance 1e-4),
// zero couplings and biases, word bias set to the training unigram
// log-probabilities.
ModelParams init_params(const HiddenConfig& cfg, int vocab, const VectorXd& unigram_log_probs,
                        uint64_t seed);

// Training-set unigram log-probabilities with add-one smoothing so every word
// bias is finite.
VectorXd unigram_log_probs(const std::vector<const Thread*>& threads, int vocab);

// Zero out the blocks a variant does not use and stamp the variant tag.
ModelParams apply_variant(const ModelParams& params, Variant v);

// Binary checkpoint, little-endian: "DDTM", u32 version, u32 K, u32 F_c,
// u32 F_t, u32 variant, blocks a b c b_start b_stop U V W as row-major f64,
// then a u64 FNV-1a checksum of all preceding bytes.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ddtm
