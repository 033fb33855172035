#include <doctest.h>

#include "ddtm/inference.hpp"
#include "ddtm/oracle.hpp"
#include "support/test_oracles.hpp"

using namespace ddtm;
using namespace ddtm::testing;

namespace {

Thread single_comment_thread(std::vector<std::pair<int, int64_t>> counts) {
    Thread t;
    t.id = "s";
    CommentBag bag;
    bag.id = "op";
    bag.counts = std::move(counts);
    bag.length = 0;
    for (auto& [k, n] : bag.counts) bag.length += n;
    t.comments.push_back(bag);
    return t;
}

Thread chain_thread(int n_comments, std::vector<std::vector<std::pair<int, int64_t>>> counts) {
    Thread t;
    t.id = "chain";
    for (int n = 0; n < n_comments; ++n) {
        CommentBag bag;
        bag.id = "c" + std::to_string(n);
        if (n > 0) bag.parent = n - 1;
        if (n < static_cast<int>(counts.size())) {
            bag.counts = counts[static_cast<size_t>(n)];
        }
        bag.length = 0;
        for (auto& [k, c] : bag.counts) bag.length += c;
        t.comments.push_back(bag);
    }
    for (int n = 1; n < n_comments; ++n) {
        t.comments[static_cast<size_t>(n - 1)].children = {n};
        t.reply_edges.emplace_back(n - 1, n);
    }
    return t;
}

PosteriorMF init_posterior(const Thread& t, const ModelParams& p) {
    PosteriorMF s;
    s.psi = MatrixXd::Constant(p.cfg.comment_bits, t.size(), 0.5);
    s.psi0 = VectorXd::Constant(p.cfg.thread_bits, 0.5);
    return s;
}

JointMF init_joint(const Thread& t, const ModelParams& p) {
    JointMF s;
    s.phi = MatrixXd::Constant(p.cfg.comment_bits, t.size(), 0.5);
    s.phi0 = VectorXd::Constant(p.cfg.thread_bits, 0.5);
    s.gamma = MatrixXd::Constant(p.vocab_size(), t.size(), 1.0 / p.vocab_size());
    return s;
}

}  // namespace

TEST_CASE("update_psi trivial and decoupled-exact cases") {
    SUBCASE("zero parameters give 0.5 per bit") {
        ModelParams p;
        p.cfg = {.comment_bits = 3, .thread_bits = 2, .variant = Variant::ddtm};
        p.blocks = ParamBlocks::zeros(4, 3, 2);
        Thread t = single_comment_thread({{0, 1}, {2, 1}});
        PosteriorMF s = init_posterior(t, p);
        update_psi(t, p, s, 0);
        CHECK(s.psi.col(0).isApproxToConstant(0.5, 1e-12));
        update_psi0(t, p, s);
        CHECK(s.psi0.isApproxToConstant(0.5, 1e-12));
    }

    SUBCASE("isolated comment matches the enumerated posterior") {
        Rng rng(3);
        TinyInstanceOptions opts;
        opts.thread_bits = 0;
        for (int trial = 0; trial < 10; ++trial) {
            ModelParams p = random_tiny_params(rng, opts);
            p.blocks.W.setZero();  // bits decouple
            Thread t = single_comment_thread({{0, 2}, {1, 1}});
            PosteriorMF s = init_posterior(t, p);
            update_psi(t, p, s, 0);

            std::vector<std::vector<double>> exact_c;
            std::vector<double> exact_t;
            brute_posterior_marginals(t, p, &exact_c, &exact_t);
            for (int f = 0; f < opts.comment_bits; ++f) {
                CHECK(s.psi(f, 0) == doctest::Approx(exact_c[0][static_cast<size_t>(f)]).epsilon(1e-10));
            }
        }
    }

    SUBCASE("W-only chain fixed point matches scalar iteration") {
        // two comments, one bit, only W nonzero
        ModelParams p;
        p.cfg = {.comment_bits = 1, .thread_bits = 0, .variant = Variant::ddtm};
        p.blocks = ParamBlocks::zeros(2, 1, 0);
        p.blocks.W(0, 0) = 1.7;
        Thread t = chain_thread(2, {{{0, 1}}, {{1, 1}}});

        PosteriorMF s = init_posterior(t, p);
        for (int sweep = 0; sweep < 200; ++sweep) {
            update_psi(t, p, s, 1);
            update_psi(t, p, s, 0);
        }
        // scalar fixed-point iteration of u = sigma(1.7 v), v = sigma(1.7 u)
        double u = 0.5, v = 0.5;
        for (int i = 0; i < 2000; ++i) {
            v = 1.0 / (1.0 + std::exp(-1.7 * u));
            u = 1.0 / (1.0 + std::exp(-1.7 * v));
        }
        CHECK(s.psi(0, 0) == doctest::Approx(u).epsilon(1e-8));
        CHECK(s.psi(0, 1) == doctest::Approx(v).epsilon(1e-8));
    }
}

TEST_CASE("update_psi0 matches the exact thread-bit posterior") {
    Rng rng(11);
    TinyInstanceOptions opts;
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = single_comment_thread({{0, 1}, {3, 2}});
        // h0 is conditionally independent of h_n given x in a single-comment
        // thread only through shared words; posterior over h0 still factorizes
        // because V-terms depend on x alone. Zero U/W so the full posterior is
        // exactly independent.
        p.blocks.U.setZero();
        p.blocks.W.setZero();
        PosteriorMF s = init_posterior(t, p);
        update_psi0(t, p, s);
        std::vector<std::vector<double>> exact_c;
        std::vector<double> exact_t;
        brute_posterior_marginals(t, p, &exact_c, &exact_t);
        for (int f = 0; f < opts.thread_bits; ++f) {
            CHECK(s.psi0[f] == doctest::Approx(exact_t[static_cast<size_t>(f)]).epsilon(1e-10));
        }
    }

    SUBCASE("doubling counts doubles the pre-activation") {
        Rng rng2(13);
        TinyInstanceOptions opts2;
        ModelParams p = random_tiny_params(rng2, opts2);
        Thread t1 = single_comment_thread({{0, 1}, {2, 1}});
        Thread t2 = single_comment_thread({{0, 2}, {2, 2}});
        PosteriorMF s1 = init_posterior(t1, p), s2 = init_posterior(t2, p);
        update_psi0(t1, p, s1);
        update_psi0(t2, p, s2);
        for (int f = 0; f < opts2.thread_bits; ++f) {
            double pre1 = std::log(s1.psi0[f] / (1.0 - s1.psi0[f]));
            double pre2 = std::log(s2.psi0[f] / (1.0 - s2.psi0[f]));
            CHECK(pre2 == doctest::Approx(2.0 * pre1).epsilon(1e-8));
        }
    }
}

TEST_CASE("update_phi maximizes the joint bound (1-D grid oracle)") {
    Rng rng(17);
    TinyInstanceOptions opts;
    opts.vocab = 2;
    opts.comment_bits = 1;
    opts.thread_bits = 1;
    for (int trial = 0; trial < 5; ++trial) {
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = chain_thread(2, {{{0, 2}}, {{1, 1}}});
        JointMF s = init_joint(t, p);
        // randomize the other coordinates so the test is not anchored at 0.5
        s.phi(0, 1) = 0.3;
        s.phi0[0] = 0.8;
        s.gamma(0, 0) = 0.7;
        s.gamma(1, 0) = 0.3;

        JointMF updated = s;
        update_phi(t, p, updated, 0);

        auto to_vec = [&](const JointMF& state, double phi00) {
            std::vector<std::vector<double>> phi = {{phi00}, {state.phi(0, 1)}};
            std::vector<double> phi0 = {state.phi0[0]};
            std::vector<std::vector<double>> gamma = {
                {state.gamma(0, 0), state.gamma(1, 0)},
                {state.gamma(0, 1), state.gamma(1, 1)}};
            return scalar_elbo_joint(t, p, phi, phi0, gamma);
        };
        double best = -1e300, best_phi = 0.5;
        for (int i = 1; i < 20000; ++i) {
            double candidate = i / 20000.0;
            double val = to_vec(s, candidate);
            if (val > best) {
                best = val;
                best_phi = candidate;
            }
        }
        CHECK(updated.phi(0, 0) == doctest::Approx(best_phi).epsilon(2e-4));
    }

    SUBCASE("zero-length comment sees only boundary terms") {
        ModelParams p;
        p.cfg = {.comment_bits = 1, .thread_bits = 0, .variant = Variant::ddtm};
        p.blocks = ParamBlocks::zeros(3, 1, 0);
        p.blocks.b_start[0] = 0.7;
        p.blocks.b_stop[0] = -0.2;
        Thread t = single_comment_thread({});
        JointMF s = init_joint(t, p);
        update_phi(t, p, s, 0);
        CHECK(s.phi(0, 0) == doctest::Approx(sigmoid(0.5)).epsilon(1e-12));
    }
}

TEST_CASE("update_gamma is the simplex maximizer (grid oracle)") {
    SUBCASE("zero parameters give the uniform distribution") {
        ModelParams p;
        p.cfg = {.comment_bits = 2, .thread_bits = 1, .variant = Variant::ddtm};
        p.blocks = ParamBlocks::zeros(4, 2, 1);
        Thread t = single_comment_thread({{1, 2}});
        JointMF s = init_joint(t, p);
        s.gamma.col(0) << 0.7, 0.1, 0.1, 0.1;
        update_gamma(t, p, s, 0);
        CHECK(s.gamma.col(0).isApproxToConstant(0.25, 1e-12));
        CHECK(s.gamma.col(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("only word bias active reproduces softmax(a)") {
        ModelParams p;
        p.cfg = {.comment_bits = 1, .thread_bits = 1, .variant = Variant::ddtm};
        p.blocks = ParamBlocks::zeros(3, 1, 1);
        p.blocks.a << 0.3, -0.4, 1.1;
        Thread t = single_comment_thread({{0, 1}});
        JointMF s = init_joint(t, p);
        update_gamma(t, p, s, 0);
        VectorXd expected = softmax(p.blocks.a);
        CHECK((s.gamma.col(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("2-simplex grid search") {
        Rng rng(23);
        TinyInstanceOptions opts;
        opts.vocab = 3;
        opts.comment_bits = 1;
        opts.thread_bits = 1;
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = single_comment_thread({{0, 1}, {2, 2}});
        JointMF s = init_joint(t, p);
        s.phi(0, 0) = 0.85;
        s.phi0[0] = 0.25;

        JointMF updated = s;
        update_gamma(t, p, updated, 0);

        double best = -1e300;
        double g0_best = 0, g1_best = 0;
        const int grid = 400;
        for (int i = 0; i <= grid; ++i) {
            for (int j = 0; j <= grid - i; ++j) {
                double g0 = static_cast<double>(i) / grid;
                double g1 = static_cast<double>(j) / grid;
                double g2 = 1.0 - g0 - g1;
                std::vector<std::vector<double>> phi = {{s.phi(0, 0)}};
                std::vector<double> phi0 = {s.phi0[0]};
                std::vector<std::vector<double>> gamma = {{g0, g1, g2}};
                double val = scalar_elbo_joint(t, p, phi, phi0, gamma);
                if (val > best) {
                    best = val;
                    g0_best = g0;
                    g1_best = g1;
                }
            }
        }
        CHECK(updated.gamma(0, 0) == doctest::Approx(g0_best).epsilon(0.02));
        CHECK(updated.gamma(1, 0) == doctest::Approx(g1_best).epsilon(0.02));
        // and the analytic update achieves at least the grid optimum
        std::vector<std::vector<double>> phi = {{s.phi(0, 0)}};
        std::vector<double> phi0 = {s.phi0[0]};
        std::vector<std::vector<double>> gamma = {
            {updated.gamma(0, 0), updated.gamma(1, 0), updated.gamma(2, 0)}};
        CHECK(scalar_elbo_joint(t, p, phi, phi0, gamma) >= best - 1e-9);
    }
}

TEST_CASE("single-coordinate updates never decrease their bound") {
    Rng rng(31);
    TinyInstanceOptions opts;
    int update_count = 0;
    for (int trial = 0; trial < 15; ++trial) {
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = random_tiny_thread(rng, opts);

        PosteriorMF ps = init_posterior(t, p);
        double bound = elbo_posterior(t, p, ps);
        for (int pass = 0; pass < 4; ++pass) {
            for (int n = 0; n < t.size(); ++n) {
                update_psi(t, p, ps, n);
                double fresh = elbo_posterior(t, p, ps);
                CHECK(fresh >= bound - 1e-9);
                bound = fresh;
                ++update_count;
            }
            update_psi0(t, p, ps);
            double fresh = elbo_posterior(t, p, ps);
            CHECK(fresh >= bound - 1e-9);
            bound = fresh;
        }

        JointMF js = init_joint(t, p);
        bound = elbo_joint(t, p, js);
        for (int pass = 0; pass < 4; ++pass) {
            for (int n = 0; n < t.size(); ++n) {
                update_phi(t, p, js, n);
                double fresh = elbo_joint(t, p, js);
                CHECK(fresh >= bound - 1e-9);
                bound = fresh;
                update_gamma(t, p, js, n);
                fresh = elbo_joint(t, p, js);
                CHECK(fresh >= bound - 1e-9);
                bound = fresh;
                ++update_count;
            }
            update_phi0(t, p, js);
            double fresh = elbo_joint(t, p, js);
            CHECK(fresh >= bound - 1e-9);
            bound = fresh;
        }
    }
    CHECK(update_count > 100);
}

TEST_CASE("fit_posterior honors the upward-downward schedule") {
    Rng rng(37);
    TinyInstanceOptions opts;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = chain_thread(3, {{{0, 1}}, {{1, 1}}, {{2, 1}}});

    // two full sweeps with granular updates in the documented order:
    // leaves-to-root, root-to-leaves, thread bits once per sweep
    MFSchedule sched{.max_sweeps = 2, .tolerance = 1e-300};
    PosteriorMF manual = init_posterior(t, p);
    for (int sweep = 0; sweep < 2; ++sweep) {
        for (int n : {2, 1, 0}) update_psi(t, p, manual, n);
        for (int n : {0, 1, 2}) update_psi(t, p, manual, n);
        update_psi0(t, p, manual);
    }
    PosteriorMF fitted = fit_posterior(t, p, sched);
    CHECK(fitted.sweeps == 2);
    CHECK((fitted.psi - manual.psi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fitted.psi0 - manual.psi0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(fitted.bound == doctest::Approx(elbo_posterior(t, p, manual)).epsilon(1e-14));
}

TEST_CASE("fit_joint follows phi-sweep-then-gamma order") {
    Rng rng(41);
    TinyInstanceOptions opts;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = random_tiny_thread(rng, opts);

    MFSchedule sched{.max_sweeps = 3, .tolerance = 1e-300, .init_phi_from_psi = false};
    JointMF manual = init_joint(t, p);
    TreeOrder order = TreeOrder::of(t);
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (int d = static_cast<int>(order.levels.size()) - 1; d >= 0; --d) {
            for (int n : order.levels[static_cast<size_t>(d)]) update_phi(t, p, manual, n);
        }
        for (size_t d = 0; d < order.levels.size(); ++d) {
            for (int n : order.levels[d]) update_phi(t, p, manual, n);
        }
        update_phi0(t, p, manual);
        for (int n = 0; n < t.size(); ++n) update_gamma(t, p, manual, n);
    }
    JointMF fitted = fit_joint(t, p, sched);
    CHECK(fitted.sweeps == 3);
    CHECK((fitted.phi - manual.phi).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((fitted.gamma - manual.gamma).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("bounds are valid against exact enumeration") {
    Rng rng(43);
    TinyInstanceOptions opts;
    MFSchedule sched{.max_sweeps = 10, .tolerance = 1e-6};
    for (int trial = 0; trial < 20; ++trial) {
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = random_tiny_thread(rng, opts);

        PosteriorMF ps = fit_posterior(t, p, sched);
        JointMF js = fit_joint(t, p, sched, &ps);

        double exact_e = brute_marginal_energy(t, p);
        double exact_z = brute_log_z(t, p);
        CHECK(ps.bound <= exact_e + 1e-9);
        CHECK(js.bound <= exact_z + 1e-9);

        // the product-side enumeration agrees with the independent one
        CHECK(exact_marginal_energy(t, p) == doctest::Approx(exact_e).epsilon(1e-10));
        CHECK(exact_log_z(ThreadShape::of(t), p) == doctest::Approx(exact_z).epsilon(1e-10));
    }
}

TEST_CASE("zero-parameter bounds are tight closed forms") {
    ModelParams p;
    p.cfg = {.comment_bits = 2, .thread_bits = 1, .variant = Variant::ddtm};
    p.blocks = ParamBlocks::zeros(4, 2, 1);
    Thread t = chain_thread(2, {{{0, 1}, {1, 1}}, {{2, 2}}});
    MFSchedule sched;

    double n_words = 4.0;
    double expected_z = n_words * std::log(4.0) + (2 * 2 + 1) * std::log(2.0);
    JointMF js = fit_joint(t, p, sched);
    CHECK(js.bound == doctest::Approx(expected_z).epsilon(1e-12));

    PosteriorMF ps = fit_posterior(t, p, sched);
    CHECK(ps.bound == doctest::Approx(-n_words * std::log(4.0) + expected_z).epsilon(1e-12));

    // approximate log-likelihood is exact here
    CHECK(approx_log_likelihood(t, p, sched) == doctest::Approx(-n_words * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("near-degenerate psi makes elbo_E the energy of the rounded assignment") {
    ModelParams p;
    p.cfg = {.comment_bits = 2, .thread_bits = 1, .variant = Variant::ddtm};
    p.blocks = ParamBlocks::zeros(3, 2, 1);
    Rng rng(47);
    TinyInstanceOptions opts{.vocab = 3, .comment_bits = 2, .thread_bits = 1};
    p = random_tiny_params(rng, opts);
    Thread t = single_comment_thread({{0, 1}, {1, 1}});

    PosteriorMF s = init_posterior(t, p);
    s.psi(0, 0) = 1.0 - 1e-9;
    s.psi(1, 0) = 1e-9;
    s.psi0[0] = 1.0 - 1e-9;
    double bound = elbo_posterior(t, p, s);
    double e = scalar_energy(t, {{1, 0}}, {1}, p);
    CHECK(bound == doctest::Approx(e).epsilon(1e-6));
}

TEST_CASE("decoupled posterior is exact") {
    Rng rng(53);
    TinyInstanceOptions opts;
    opts.thread_bits = 0;
    MFSchedule sched{.max_sweeps = 10, .tolerance = 1e-10};
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams p = random_tiny_params(rng, opts);
        p.blocks.W.setZero();
        Thread t = random_tiny_thread(rng, opts);
        PosteriorMF s = fit_posterior(t, p, sched);

        std::vector<std::vector<double>> exact_c;
        std::vector<double> exact_t;
        brute_posterior_marginals(t, p, &exact_c, &exact_t);
        for (int n = 0; n < t.size(); ++n) {
            for (int f = 0; f < opts.comment_bits; ++f) {
                CHECK(s.psi(f, n) ==
                      doctest::Approx(exact_c[static_cast<size_t>(n)][static_cast<size_t>(f)]).epsilon(1e-10));
            }
        }
        CHECK(s.sweeps <= 2);
    }
}

TEST_CASE("warm start does not need more sweeps than cold start") {
    Rng rng(59);
    TinyInstanceOptions opts;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = chain_thread(3, {{{0, 2}}, {{1, 1}, {2, 1}}, {{3, 2}}});
    MFSchedule sched{.max_sweeps = 50, .tolerance = 1e-6};

    PosteriorMF psi = fit_posterior(t, p, sched);
    JointMF cold = fit_joint(t, p, sched, nullptr);
    JointMF warm = fit_joint(t, p, sched, &psi);
    CHECK(warm.sweeps <= cold.sweeps);
    MESSAGE("cold sweeps: ", cold.sweeps, ", warm sweeps: ", warm.sweeps);
}

TEST_CASE("fits are deterministic") {
    Rng rng(61);
    TinyInstanceOptions opts;
    ModelParams p = random_tiny_params(rng, opts);
    Thread t = random_tiny_thread(rng, opts);
    MFSchedule sched;
    PosteriorMF a = fit_posterior(t, p, sched);
    PosteriorMF b = fit_posterior(t, p, sched);
    CHECK(a.psi == b.psi);
    CHECK(a.psi0 == b.psi0);
    CHECK(a.bound == b.bound);
    JointMF ja = fit_joint(t, p, sched, &a);
    JointMF jb = fit_joint(t, p, sched, &b);
    CHECK(ja.phi == jb.phi);
    CHECK(ja.gamma == jb.gamma);
}

TEST_CASE("batched fits equal per-thread fits") {
    Rng rng(67);
    TinyInstanceOptions opts;
    opts.max_comments = 5;
    opts.max_words = 3;
    ModelParams p = random_tiny_params(rng, opts);
    std::vector<Thread> threads;
    for (int i = 0; i < 6; ++i) threads.push_back(random_tiny_thread(rng, opts));
    std::vector<const Thread*> ptrs;
    for (auto& t : threads) ptrs.push_back(&t);
    MFSchedule sched{.max_sweeps = 10, .tolerance = 1e-5};

    auto batch_ps = fit_posterior_batch(ptrs, p, sched);
    std::vector<const PosteriorMF*> warm;
    for (auto& s : batch_ps) warm.push_back(&s);
    auto batch_js = fit_joint_batch(ptrs, p, sched, &warm);

    for (size_t i = 0; i < threads.size(); ++i) {
        PosteriorMF single = fit_posterior(threads[i], p, sched);
        CHECK((batch_ps[i].psi - single.psi).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((batch_ps[i].psi0 - single.psi0).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(batch_ps[i].sweeps == single.sweeps);

        JointMF js = fit_joint(threads[i], p, sched, &single);
        CHECK((batch_js[i].phi - js.phi).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((batch_js[i].gamma - js.gamma).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(batch_js[i].sweeps == js.sweeps);
    }
}

TEST_CASE("approx_log_likelihood special cases") {
    SUBCASE("unigram variant equals the multinomial closed form") {
        Rng rng(71);
        TinyInstanceOptions opts;
        opts.variant = Variant::unigram;
        ModelParams p = random_tiny_params(rng, opts);
        Thread t = random_tiny_thread(rng, opts);
        MFSchedule sched;
        double expected = 0.0;
        double lse = log_sum_exp(p.blocks.a);
        for (const auto& bag : t.comments) {
            for (auto& [k, n] : bag.counts) expected += static_cast<double>(n) * p.blocks.a[k];
            expected -= static_cast<double>(bag.length) * lse;
        }
        CHECK(approx_log_likelihood(t, p, sched) == doctest::Approx(expected).epsilon(1e-10));
    }

    SUBCASE("coupled tiny instance lands near the exact likelihood") {
        Rng rng(73);
        TinyInstanceOptions opts;
        opts.weight_scale = 0.5;
        MFSchedule sched{.max_sweeps = 20, .tolerance = 1e-8};
        for (int trial = 0; trial < 5; ++trial) {
            ModelParams p = random_tiny_params(rng, opts);
            Thread t = random_tiny_thread(rng, opts);
            double approx = approx_log_likelihood(t, p, sched);
            double exact = brute_marginal_energy(t, p) - brute_log_z(t, p);
            MESSAGE("approx: ", approx, " exact: ", exact, " gap: ", approx - exact);
            // not a bound; just require the estimate to be in the right region
            CHECK(std::abs(approx - exact) < 1.0);
        }
    }
}
