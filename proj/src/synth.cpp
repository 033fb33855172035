#include "ddtm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "ddtm/gibbs.hpp"
#include "ddtm/oracle.hpp"

namespace ddtm {

std::vector<std::string> synthetic_tokens(int vocab) {
    std::vector<std::string> tokens;
    tokens.reserve(static_cast<size_t>(vocab));
    char buf[16];
    for (int k = 0; k < vocab; ++k) {
        std::snprintf(buf, sizeof buf, "w%05d", k);
        tokens.emplace_back(buf);
    }
    return tokens;
}

ThreadShape chain_shape(int comments, int64_t words_per_comment) {
    ThreadShape s;
    for (int n = 0; n < comments; ++n) {
        s.parents.push_back(n - 1);
        s.lengths.push_back(words_per_comment);
    }
    return s;
}

ThreadShape star_shape(int comments, int64_t words_per_comment) {
    ThreadShape s;
    for (int n = 0; n < comments; ++n) {
        s.parents.push_back(n == 0 ? -1 : 0);
        s.lengths.push_back(words_per_comment);
    }
    return s;
}

ThreadShape random_tree_shape(int comments, int64_t min_words, int64_t max_words, Rng& rng) {
    DDTM_REQUIRE(comments >= 1 && min_words >= 0 && max_words >= min_words,
                 "invalid tree shape request");
    ThreadShape s;
    for (int n = 0; n < comments; ++n) {
        s.parents.push_back(n == 0 ? -1 : static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n))));
        s.lengths.push_back(min_words +
                            static_cast<int64_t>(rng.uniform_index(
                                static_cast<uint64_t>(max_words - min_words + 1))));
    }
    return s;
}

ModelParams synth_preset_params(const std::string& preset, int vocab, int comment_bits,
                                int thread_bits, uint64_t seed) {
    ModelParams p;
    p.cfg = {.comment_bits = comment_bits, .thread_bits = thread_bits, .variant = Variant::ddtm};
    p.blocks = ParamBlocks::zeros(vocab, comment_bits, thread_bits);
    Rng rng = Rng::derive(seed, 0x9e7);

    if (preset == "uniform") {
        return p;
    }
    if (preset == "coupled") {
        // block-structured emissions: each comment bit boosts an interleaved
        // word group, thread bits boost coarser groups, and a diagonal
        // coupling makes the comment state persist down the reply tree. The
        // biases cancel each bit's normalizer advantage so sampled states stay
        // balanced instead of saturating.
        const double emission = 2.2;
        const double coupling = 2.5;
        const double mean_words = 4.5;
        VectorXd base = VectorXd::Zero(vocab);
        for (int f = 0; f < comment_bits; ++f) {
            for (int k = 0; k < vocab; ++k) {
                if ((k >> f) % 2 == 1) p.blocks.U(f, k) = emission;
            }
            p.blocks.W(f, f) = coupling;
            p.blocks.b[f] = -(log_sum_exp(base + p.blocks.U.row(f).transpose()) -
                              log_sum_exp(base)) -
                            coupling / (2.0 * mean_words);
            p.blocks.b_start[f] = coupling / 2.0;
        }
        for (int f = 0; f < thread_bits; ++f) {
            for (int k = 0; k < vocab; ++k) {
                if ((k >> (comment_bits + f)) % 2 == 1) p.blocks.V(f, k) = emission;
            }
            p.blocks.c[f] = -(log_sum_exp(base + p.blocks.V.row(f).transpose()) -
                              log_sum_exp(base));
        }
        (void)rng;
        return p;
    }
    if (preset == "two_regime" || preset == "two-regime") {
        DDTM_REQUIRE(thread_bits >= 2, "two_regime preset needs at least two thread bits");
        // first half of the thread bits emits the low vocabulary half, second
        // half emits the high half; regimes activate one group each
        for (int f = 0; f < thread_bits; ++f) {
            bool low_group = f < thread_bits / 2;
            for (int k = 0; k < vocab; ++k) {
                bool low_word = k < vocab / 2;
                p.blocks.V(f, k) = (low_group == low_word) ? 1.4 : -0.8;
            }
            p.blocks.c[f] = -0.02;
        }
        for (int f = 0; f < comment_bits; ++f) {
            for (int k = 0; k < vocab; ++k) p.blocks.U(f, k) = 0.35 * rng.normal();
            if (comment_bits > 1) p.blocks.W(f, (f + 1) % comment_bits) = 0.8;
            p.blocks.b[f] = -0.05;
        }
        return p;
    }
    throw InputError("unknown synth preset: " + preset);
}

std::vector<SynthRegime> two_regime_patterns(int thread_bits) {
    DDTM_REQUIRE(thread_bits >= 2, "two_regime preset needs at least two thread bits");
    VectorXd a = VectorXd::Zero(thread_bits);
    VectorXd b = VectorXd::Zero(thread_bits);
    for (int f = 0; f < thread_bits; ++f) {
        if (f < thread_bits / 2) {
            a[f] = 1.0;
        } else {
            b[f] = 1.0;
        }
    }
    return {{"regime_a", a}, {"regime_b", b}};
}

namespace {

struct DrawnThread {
    std::vector<VectorXd> counts;  // dense K per comment
    MatrixXd h;
    VectorXd h0;
};

DrawnThread draw_gibbs(const ThreadShape& shape, const ModelParams& params,
                       const VectorXd* clamp, int burnin, Rng& rng) {
    GibbsSampler sampler(shape, params);
    if (clamp) sampler.clamp_thread_bits(*clamp);
    sampler.set_beta(1.0);
    sampler.init_from_base(rng);
    sampler.sweep(rng, burnin);
    DrawnThread out;
    out.h = sampler.comment_bits();
    out.h0 = sampler.thread_bits();
    for (int n = 0; n < shape.size(); ++n) out.counts.push_back(sampler.counts().col(n));
    return out;
}

DrawnThread draw_exact(const ExactThreadSampler& sampler, Rng& rng) {
    auto s = sampler.draw(rng);
    return DrawnThread{std::move(s.counts), std::move(s.h), std::move(s.h0)};
}

}  // namespace

Corpus synth_corpus(const ModelParams& params, const std::vector<ThreadShape>& shapes,
                    const SynthOptions& opts) {
    DDTM_REQUIRE(!shapes.empty() && opts.num_threads >= 1, "synthesis needs shapes and a count");
    for (const auto& regime : opts.regimes) {
        DDTM_REQUIRE(regime.thread_bits.size() == params.cfg.thread_bits,
                     "regime pattern does not match thread bits");
    }
    DDTM_REQUIRE(opts.regimes.empty() || opts.sampler == SynthSampler::gibbs,
                 "planted regimes require the gibbs sampler");

    const int vocab = params.vocab_size();
    const int fc = params.cfg.comment_bits;

    // exact samplers are shared per distinct shape
    std::map<std::string, ExactThreadSampler> exact;
    if (opts.sampler == SynthSampler::exact_enumeration) {
        for (const auto& shape : shapes) {
            exact.try_emplace(shape.key(), shape, params, opts.log2_limit);
        }
    }

    // planted metadata signals
    Rng plant_rng = Rng::derive(opts.seed, 0xdead);
    VectorXd w_up = VectorXd::Zero(fc);
    VectorXd w_del = VectorXd::Zero(fc);
    for (int f = 0; f < fc; ++f) {
        w_up[f] = plant_rng.normal();
        w_del[f] = plant_rng.normal();
    }
    double scale = fc > 0 ? 1.0 / std::sqrt(static_cast<double>(fc)) : 0.0;

    Corpus corpus;
    corpus.vocab = Vocabulary(synthetic_tokens(vocab));
    char buf[32];
    for (int i = 0; i < opts.num_threads; ++i) {
        Rng rng = Rng::derive(opts.seed, 0x711 + static_cast<uint64_t>(i));
        const ThreadShape& shape = shapes[static_cast<size_t>(i) % shapes.size()];

        const SynthRegime* regime = nullptr;
        if (!opts.regimes.empty()) {
            regime = &opts.regimes[rng.uniform_index(opts.regimes.size())];
        }
        DrawnThread drawn =
            opts.sampler == SynthSampler::exact_enumeration
                ? draw_exact(exact.at(shape.key()), rng)
                : draw_gibbs(shape, params, regime ? &regime->thread_bits : nullptr,
                             opts.gibbs_burnin, rng);

        Thread t;
        std::snprintf(buf, sizeof buf, "t%06d", i);
        t.id = buf;
        t.subreddit = regime ? regime->label : opts.subreddit;
        t.comments.resize(static_cast<size_t>(shape.size()));
        for (int n = 0; n < shape.size(); ++n) {
            CommentBag& bag = t.comments[static_cast<size_t>(n)];
            std::snprintf(buf, sizeof buf, "c%03d", n);
            bag.id = buf;
            if (shape.parents[static_cast<size_t>(n)] >= 0) {
                bag.parent = shape.parents[static_cast<size_t>(n)];
            }
            bag.length = 0;
            for (int k = 0; k < vocab; ++k) {
                auto cnt = static_cast<int64_t>(drawn.counts[static_cast<size_t>(n)][k]);
                if (cnt > 0) {
                    bag.counts.emplace_back(k, cnt);
                    bag.length += cnt;
                }
            }
            double up_signal = 0.0, del_signal = -1.0;
            if (fc > 0) {
                VectorXd signed_bits = 2.0 * drawn.h.col(n) - VectorXd::Ones(fc);
                up_signal = scale * w_up.dot(signed_bits);
                del_signal = 2.0 * scale * w_del.dot(signed_bits);
            }
            bag.upvotes = std::llround(5.0 * up_signal + rng.normal());
            bag.has_deleted_child = rng.bernoulli(sigmoid(del_signal));
        }
        for (int n = 0; n < shape.size(); ++n) {
            int p = shape.parents[static_cast<size_t>(n)];
            if (p >= 0) {
                t.comments[static_cast<size_t>(p)].children.push_back(n);
                t.reply_edges.emplace_back(p, n);
            }
        }
        std::sort(t.reply_edges.begin(), t.reply_edges.end());
        corpus.threads.push_back(std::move(t));
    }
    corpus.split = make_split(corpus.threads, opts.test_fraction, opts.seed);
    return corpus;
}

}  // namespace ddtm
