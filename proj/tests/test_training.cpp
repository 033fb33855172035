#include <doctest.h>

#include "ddtm/oracle.hpp"
#include "ddtm/synth.hpp"
#include "ddtm/training.hpp"
#include "support/test_oracles.hpp"

using namespace ddtm;
using namespace ddtm::testing;

namespace {

// Central finite differences of exact log p(x; theta) over every block.
GradEstimate fd_gradient(const Thread& t, const ModelParams& params, double step = 1e-5) {
    GradEstimate g = ParamBlocks::zeros(params.vocab_size(), params.cfg.comment_bits,
                                        params.cfg.thread_bits);
    ModelParams probe = params;
    auto diff = [&](double* coeff, double* out) {
        double orig = *coeff;
        *coeff = orig + step;
        double hi = exact_log_likelihood(t, probe);
        *coeff = orig - step;
        double lo = exact_log_likelihood(t, probe);
        *coeff = orig;
        *out = (hi - lo) / (2.0 * step);
    };
    auto block = [&](MatrixXd& src, MatrixXd& dst) {
        for (Eigen::Index i = 0; i < src.size(); ++i) diff(src.data() + i, dst.data() + i);
    };
    auto vec = [&](VectorXd& src, VectorXd& dst) {
        for (Eigen::Index i = 0; i < src.size(); ++i) diff(src.data() + i, dst.data() + i);
    };
    block(probe.blocks.U, g.U);
    block(probe.blocks.V, g.V);
    block(probe.blocks.W, g.W);
    vec(probe.blocks.a, g.a);
    vec(probe.blocks.b, g.b);
    vec(probe.blocks.c, g.c);
    vec(probe.blocks.b_start, g.b_start);
    vec(probe.blocks.b_stop, g.b_stop);
    return g;
}

double block_rel_error(const MatrixXd& got, const MatrixXd& want) {
    double denom = std::max(want.norm(), 1e-6);
    return (got - want).norm() / denom;
}
double block_rel_error(const VectorXd& got, const VectorXd& want) {
    double denom = std::max(want.norm(), 1e-6);
    return (got - want).norm() / denom;
}

}  // namespace

TEST_CASE("gradient vanishes at matched moments") {
    Rng rng(3);
    TinyInstanceOptions opts;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = random_tiny_thread(rng, opts);

    PosteriorMF ps;
    ps.psi = MatrixXd::Constant(opts.comment_bits, t.size(), 0.37);
    ps.psi0 = VectorXd::Constant(opts.thread_bits, 0.81);
    JointMF js;
    js.phi = ps.psi;
    js.phi0 = ps.psi0;
    js.gamma = MatrixXd::Zero(opts.vocab, t.size());
    for (int n = 0; n < t.size(); ++n) {
        const CommentBag& bag = t.comments[static_cast<size_t>(n)];
        if (bag.length == 0) {
            js.gamma.col(n).setConstant(1.0 / opts.vocab);
            continue;
        }
        js.gamma.col(n) = dense_counts(bag, opts.vocab) / static_cast<double>(bag.length);
    }
    GradEstimate g = grad_estimate(t, p, ps, js);
    CHECK(g.U.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.V.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.W.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.a.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.b.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.c.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.b_start.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.b_stop.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unigram gradient is the exact multinomial gradient") {
    Rng rng(5);
    TinyInstanceOptions opts;
    opts.variant = Variant::unigram;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = random_tiny_thread(rng, opts);
    MFSchedule sched;
    PosteriorMF ps = fit_posterior(t, p, sched);
    JointMF js = fit_joint(t, p, sched, &ps);
    GradEstimate g = grad_estimate(t, p, ps, js);

    VectorXd expected = VectorXd::Zero(opts.vocab);
    VectorXd sm = softmax(p.blocks.a);
    for (const auto& bag : t.comments) {
        for (auto& [k, n] : bag.counts) expected[k] += static_cast<double>(n);
        expected -= static_cast<double>(bag.length) * sm;
    }
    CHECK((g.a - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("exact-moment gradient matches finite differences") {
    Rng rng(7);
    TinyInstanceOptions opts;
    opts.weight_scale = 0.7;
    int instances = 0;
    while (instances < 8) {
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = random_tiny_thread(rng, opts);
        if (t.total_words() == 0) continue;
        ++instances;

        FeatureMoments post = exact_posterior_moments(t, p);
        FeatureMoments model = exact_model_moments(t, p);
        GradEstimate g = grad_from_moments(t, post, model);
        GradEstimate fd = fd_gradient(t, p);

        CHECK(block_rel_error(g.U, fd.U) < 1e-5);
        CHECK(block_rel_error(g.V, fd.V) < 1e-5);
        CHECK(block_rel_error(g.W, fd.W) < 1e-5);
        CHECK(block_rel_error(g.a, fd.a) < 1e-5);
        CHECK(block_rel_error(g.b, fd.b) < 1e-5);
        CHECK(block_rel_error(g.c, fd.c) < 1e-5);
        CHECK(block_rel_error(g.b_start, fd.b_start) < 1e-5);
        CHECK(block_rel_error(g.b_stop, fd.b_stop) < 1e-5);
    }
}

TEST_CASE("mean-field gradient agrees with its moment form") {
    Rng rng(11);
    TinyInstanceOptions opts;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = random_tiny_thread(rng, opts);
    MFSchedule sched;
    PosteriorMF ps = fit_posterior(t, p, sched);
    JointMF js = fit_joint(t, p, sched, &ps);

    GradEstimate direct = grad_estimate(t, p, ps, js);
    GradEstimate via_moments = grad_from_moments(t, moments_from_posterior(t, ps, opts.vocab),
                                                 moments_from_joint(t, js));
    CHECK((direct.U - via_moments.U).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct.V - via_moments.V).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct.W - via_moments.W).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct.a - via_moments.a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct.b - via_moments.b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((direct.c - via_moments.c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adam step behavior") {
    AdamConfig cfg;
    ModelParams p;
    p.cfg = {.comment_bits = 2, .thread_bits = 1, .variant = Variant::ddtm};
    p.blocks = ParamBlocks::zeros(3, 2, 1);
    AdamState state = AdamState::init(3, 2, 1, cfg);
    BlockMask mask;

    SUBCASE("zero gradient leaves parameters unchanged") {
        GradEstimate g = ParamBlocks::zeros(3, 2, 1);
        ModelParams before = p;
        CHECK(adam_step(p, state, g, mask));
        CHECK(state.step == 1);
        CHECK(p.blocks.U == before.blocks.U);
        CHECK(p.blocks.a == before.blocks.a);
    }

    SUBCASE("first step from zero moments is sign-like") {
        GradEstimate g = ParamBlocks::zeros(3, 2, 1);
        g.a << 0.5, -2.0, 1e-12;
        CHECK(adam_step(p, state, g, mask));
        for (int k = 0; k < 3; ++k) {
            double expected = cfg.step_size * g.a[k] / (std::abs(g.a[k]) + cfg.eps);
            CHECK(p.blocks.a[k] == doctest::Approx(expected).epsilon(1e-9));
        }
    }

    SUBCASE("constant gradient approaches a step of alpha") {
        GradEstimate g = ParamBlocks::zeros(3, 2, 1);
        g.a[0] = 0.3;
        double prev = 0.0;
        for (int i = 0; i < 500; ++i) {
            CHECK(adam_step(p, state, g, mask));
            double delta = p.blocks.a[0] - prev;
            prev = p.blocks.a[0];
            if (i > 400) CHECK(delta == doctest::Approx(cfg.step_size).epsilon(1e-3));
        }
    }

    SUBCASE("non-finite gradient is rejected without touching state") {
        GradEstimate g = ParamBlocks::zeros(3, 2, 1);
        g.a[1] = std::numeric_limits<double>::quiet_NaN();
        ModelParams before = p;
        CHECK_FALSE(adam_step(p, state, g, mask));
        CHECK(state.step == 0);
        CHECK(p.blocks.a == before.blocks.a);
    }

    SUBCASE("masked blocks stay exactly zero") {
        GradEstimate g = ParamBlocks::zeros(3, 2, 1);
        g.W.setConstant(1.0);
        g.U.setConstant(1.0);
        BlockMask nocpl = variant_mask(Variant::ddtm_nocpl);
        CHECK(adam_step(p, state, g, nocpl));
        CHECK(p.blocks.W.isZero());
        CHECK(!p.blocks.U.isZero());
    }
}

TEST_CASE("training masks, determinism, and zero-epoch behavior") {
    Rng rng(13);
    TinyInstanceOptions opts;
    opts.vocab = 6;
    ModelParams truth = random_tiny_params(rng, opts);
    std::vector<ThreadShape> shapes{chain_shape(3, 4), star_shape(3, 3)};
    SynthOptions sopts;
    sopts.num_threads = 30;
    sopts.seed = 99;
    sopts.test_fraction = 0.2;
    Corpus corpus = synth_corpus(truth, shapes, sopts);
    auto train_set = corpus.train_threads();
    auto test_set = corpus.test_threads();

    VectorXd logp = unigram_log_probs(train_set, opts.vocab);
    HiddenConfig cfg{.comment_bits = 2, .thread_bits = 2, .variant = Variant::ddtm_nocpl};
    ModelParams init = init_params(cfg, opts.vocab, logp, 31);

    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 123;
    tc.variant = Variant::ddtm_nocpl;
    tc.early_stop = false;

    SUBCASE("nocpl training keeps W at exactly zero") {
        TrainResult r = train(train_set, test_set, init, tc);
        CHECK(r.params.blocks.W.isZero());
        CHECK(!r.params.blocks.U.isZero());
        CHECK(r.diagnostics.size() == 3);
    }

    SUBCASE("fixed seed reproduces the trajectory bitwise") {
        TrainResult r1 = train(train_set, test_set, init, tc);
        TrainResult r2 = train(train_set, test_set, init, tc);
        CHECK(r1.params.blocks.U == r2.params.blocks.U);
        CHECK(r1.params.blocks.a == r2.params.blocks.a);
        for (size_t e = 0; e < r1.diagnostics.size(); ++e) {
            CHECK(r1.diagnostics[e].mean_approx_ll == r2.diagnostics[e].mean_approx_ll);
        }
    }

    SUBCASE("zero epochs return the initialization") {
        TrainConfig zero = tc;
        zero.epochs = 0;
        TrainResult r = train(train_set, test_set, init, zero);
        ModelParams expected = apply_variant(init, zero.variant);
        CHECK(r.params.blocks.U == expected.blocks.U);
        CHECK(r.params.blocks.a == expected.blocks.a);
        CHECK(r.diagnostics.empty());
    }

    SUBCASE("minibatch accumulation is deterministic") {
        TrainConfig mb = tc;
        mb.minibatch = 4;
        TrainResult r1 = train(train_set, test_set, init, mb);
        TrainResult r2 = train(train_set, test_set, init, mb);
        CHECK(r1.params.blocks.U == r2.params.blocks.U);
    }
}

TEST_CASE("unigram training converges to the train unigram distribution") {
    Rng rng(17);
    TinyInstanceOptions opts;
    opts.vocab = 5;
    ModelParams truth = random_tiny_params(rng, opts);
    SynthOptions sopts;
    sopts.num_threads = 40;
    sopts.seed = 7;
    sopts.test_fraction = 0.0;
    Corpus corpus = synth_corpus(truth, {chain_shape(3, 5)}, sopts);
    auto train_set = corpus.train_threads();

    // start away from the optimum to make convergence meaningful
    HiddenConfig cfg{.comment_bits = 0, .thread_bits = 0, .variant = Variant::unigram};
    ModelParams init;
    init.cfg = cfg;
    init.blocks = ParamBlocks::zeros(opts.vocab, 0, 0);

    TrainConfig tc;
    tc.epochs = 400;
    tc.seed = 5;
    tc.variant = Variant::unigram;
    tc.early_stop = false;
    tc.adam.step_size = 0.02;
    TrainResult r = train(train_set, {}, init, tc);

    // empirical unigram distribution of the training set
    VectorXd counts = VectorXd::Zero(opts.vocab);
    for (const Thread* t : train_set) {
        for (const auto& bag : t->comments) {
            for (auto& [k, n] : bag.counts) counts[k] += static_cast<double>(n);
        }
    }
    VectorXd empirical = counts / counts.sum();
    VectorXd fitted = softmax(r.params.blocks.a);
    double kl = 0.0;
    for (int k = 0; k < opts.vocab; ++k) {
        if (empirical[k] > 0.0) kl += empirical[k] * std::log(empirical[k] / fitted[k]);
    }
    MESSAGE("unigram KL after training: ", kl);
    CHECK(kl < 1e-4);
}

TEST_CASE("training improves held-out likelihood on coupled synthetic data") {
    Rng rng(19);
    TinyInstanceOptions opts;
    opts.vocab = 8;
    opts.comment_bits = 2;
    opts.thread_bits = 2;
    ModelParams truth = random_tiny_params(rng, opts);
    truth.blocks.W << 2.0, -1.5, -1.5, 2.0;
    SynthOptions sopts;
    sopts.num_threads = 120;
    sopts.seed = 21;
    sopts.test_fraction = 0.25;
    Corpus corpus = synth_corpus(truth, {chain_shape(3, 6), star_shape(4, 5)}, sopts);
    auto train_set = corpus.train_threads();
    auto test_set = corpus.test_threads();

    HiddenConfig cfg{.comment_bits = 2, .thread_bits = 2, .variant = Variant::ddtm};
    ModelParams init = init_params(cfg, opts.vocab, unigram_log_probs(train_set, opts.vocab), 3);
    MFSchedule sched;
    double before = mean_approx_log_likelihood(test_set, apply_variant(init, Variant::ddtm), sched);

    TrainConfig tc;
    tc.epochs = 15;
    tc.seed = 4;
    tc.variant = Variant::ddtm;
    tc.early_stop = false;
    TrainResult r = train(train_set, test_set, init, tc);
    double after = mean_approx_log_likelihood(test_set, r.params, sched);
    MESSAGE("held-out approx ll before: ", before, " after: ", after);
    CHECK(after > before);
}

TEST_CASE("early stopping respects patience") {
    Rng rng(23);
    TinyInstanceOptions opts;
    opts.vocab = 4;
    ModelParams truth = random_tiny_params(rng, opts);
    SynthOptions sopts;
    sopts.num_threads = 20;
    sopts.seed = 77;
    sopts.test_fraction = 0.3;
    Corpus corpus = synth_corpus(truth, {chain_shape(2, 3)}, sopts);

    HiddenConfig cfg{.comment_bits = 1, .thread_bits = 1, .variant = Variant::ddtm};
    ModelParams init = init_params(cfg, opts.vocab, unigram_log_probs(corpus.train_threads(), opts.vocab), 8);
    TrainConfig tc;
    tc.epochs = 100;
    tc.seed = 6;
    tc.patience = 2;
    tc.adam.step_size = 0.5;  // aggressive steps force quick overfitting swings
    TrainResult r = train(corpus.train_threads(), corpus.test_threads(), init, tc);
    CHECK(static_cast<int>(r.diagnostics.size()) < 100);
    CHECK(r.best_epoch >= 1);
}
