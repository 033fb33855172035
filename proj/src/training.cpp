#include "ddtm/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace ddtm {

GradEstimate grad_from_moments(const Thread& t, const FeatureMoments& posterior,
                               const FeatureMoments& joint) {
    const int fc = static_cast<int>(posterior.h.rows());
    const int ft = static_cast<int>(posterior.h0.size());
    const int vocab = t.size() > 0 ? static_cast<int>(posterior.x[0].size()) : 0;

    GradEstimate g = ParamBlocks::zeros(vocab, fc, ft);
    for (int n = 0; n < t.size(); ++n) {
        const size_t un = static_cast<size_t>(n);
        const CommentBag& bag = t.comments[un];
        g.U += posterior.hx[un] - joint.hx[un];
        g.V += posterior.h0x[un] - joint.h0x[un];
        g.a += posterior.x[un] - joint.x[un];
        double dn = static_cast<double>(bag.length);
        g.b += dn * (posterior.h.col(n) - joint.h.col(n));
        g.c += dn * (posterior.h0 - joint.h0);
        if (!bag.parent) g.b_start += posterior.h.col(n) - joint.h.col(n);
        if (bag.children.empty()) g.b_stop += posterior.h.col(n) - joint.h.col(n);
    }
    for (size_t e = 0; e < t.reply_edges.size(); ++e) {
        g.W += posterior.hh[e] - joint.hh[e];
    }
    return g;
}

FeatureMoments moments_from_posterior(const Thread& t, const PosteriorMF& s, int vocab) {
    FeatureMoments m;
    m.h = s.psi;
    m.h0 = s.psi0;
    for (int n = 0; n < t.size(); ++n) {
        const CommentBag& bag = t.comments[static_cast<size_t>(n)];
        VectorXd x = dense_counts(bag, vocab);
        m.x.push_back(x);
        m.hx.push_back(s.psi.col(n) * x.transpose());
        m.h0x.push_back(s.psi0 * x.transpose());
    }
    for (auto& [parent, child] : t.reply_edges) {
        m.hh.push_back(s.psi.col(parent) * s.psi.col(child).transpose());
    }
    return m;
}

FeatureMoments moments_from_joint(const Thread& t, const JointMF& s) {
    FeatureMoments m;
    m.h = s.phi;
    m.h0 = s.phi0;
    for (int n = 0; n < t.size(); ++n) {
        double dn = static_cast<double>(t.comments[static_cast<size_t>(n)].length);
        VectorXd ex = dn * s.gamma.col(n);
        m.x.push_back(ex);
        m.hx.push_back(s.phi.col(n) * ex.transpose());
        m.h0x.push_back(s.phi0 * ex.transpose());
    }
    for (auto& [parent, child] : t.reply_edges) {
        m.hh.push_back(s.phi.col(parent) * s.phi.col(child).transpose());
    }
    return m;
}

GradEstimate grad_estimate(const Thread& t, const ModelParams& p, const PosteriorMF& posterior,
                           const JointMF& joint) {
    const int vocab = p.blocks.vocab_size();
    const int fc = p.blocks.comment_bits();
    const int ft = p.blocks.thread_bits();
    DDTM_REQUIRE(posterior.psi.cols() == t.size() && joint.phi.cols() == t.size(),
                 "states not fitted on this thread");

    GradEstimate g = ParamBlocks::zeros(vocab, fc, ft);
    double total_words = 0.0;
    for (int n = 0; n < t.size(); ++n) {
        const CommentBag& bag = t.comments[static_cast<size_t>(n)];
        double dn = static_cast<double>(bag.length);
        total_words += dn;
        for (auto& [k, cnt] : bag.counts) {
            double x = static_cast<double>(cnt);
            if (fc > 0) g.U.col(k) += x * posterior.psi.col(n);
            if (ft > 0) g.V.col(k) += x * posterior.psi0;
            g.a[k] += x;
        }
        if (dn > 0.0) {
            if (fc > 0) g.U.noalias() -= dn * (joint.phi.col(n) * joint.gamma.col(n).transpose());
            if (ft > 0) g.V.noalias() -= dn * (joint.phi0 * joint.gamma.col(n).transpose());
            g.a -= dn * joint.gamma.col(n);
        }
        VectorXd bit_diff = posterior.psi.col(n) - joint.phi.col(n);
        g.b += dn * bit_diff;
        if (!bag.parent) g.b_start += bit_diff;
        if (bag.children.empty()) g.b_stop += bit_diff;
    }
    g.c = total_words * (posterior.psi0 - joint.phi0);
    for (auto& [parent, child] : t.reply_edges) {
        g.W.noalias() += posterior.psi.col(parent) * posterior.psi.col(child).transpose();
        g.W.noalias() -= joint.phi.col(parent) * joint.phi.col(child).transpose();
    }
    return g;
}

AdamState AdamState::init(int vocab, int comment_bits, int thread_bits, const AdamConfig& cfg) {
    AdamState s;
    s.m = ParamBlocks::zeros(vocab, comment_bits, thread_bits);
    s.v = ParamBlocks::zeros(vocab, comment_bits, thread_bits);
    s.step = 0;
    s.cfg = cfg;
    return s;
}

bool adam_step(ModelParams& params, AdamState& state, const GradEstimate& grad,
               const BlockMask& mask) {
    if (!grad.all_finite()) return false;
    GradEstimate g = grad;
    g.apply_mask(mask);

    state.step += 1;
    const double b1 = state.cfg.beta1;
    const double b2 = state.cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double alpha = state.cfg.step_size;
    const double eps = state.cfg.eps;

    ParamBlocks::zip(state.m, g, [&](auto& m, const auto& gb) {
        m = b1 * m + (1.0 - b1) * gb;
    });
    ParamBlocks::zip(state.v, g, [&](auto& v, const auto& gb) {
        v = b2 * v + (1.0 - b2) * gb.cwiseProduct(gb);
    });
    ParamBlocks::zip3(params.blocks, state.m, state.v, [&](auto& theta, auto& m, const auto& v) {
        auto m_hat = m.array() / corr1;
        auto v_hat = v.array() / corr2;
        theta.array() += alpha * m_hat / (v_hat.sqrt() + eps);
    });
    params.blocks.apply_mask(mask);
    return true;
}

namespace {

double grad_l2_norm(const GradEstimate& g) {
    double sq = g.U.squaredNorm() + g.V.squaredNorm() + g.W.squaredNorm() + g.a.squaredNorm() +
                g.b.squaredNorm() + g.c.squaredNorm() + g.b_start.squaredNorm() +
                g.b_stop.squaredNorm();
    return std::sqrt(sq);
}

void accumulate(GradEstimate& into, const GradEstimate& g) {
    ParamBlocks::zip(into, g, [](auto& x, const auto& y) { x += y; });
}

}  // namespace

double mean_approx_log_likelihood(const std::vector<const Thread*>& threads,
                                  const ModelParams& params, const MFSchedule& sched,
                                  int workers) {
    if (threads.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> ll(threads.size());
    parallel_for(static_cast<int>(threads.size()), workers, [&](int i) {
        ll[static_cast<size_t>(i)] = approx_log_likelihood(*threads[static_cast<size_t>(i)], params, sched);
    });
    double sum = 0.0;
    for (double v : ll) sum += v;
    return sum / static_cast<double>(threads.size());
}

TrainResult train(const std::vector<const Thread*>& train_threads,
                  const std::vector<const Thread*>& heldout_threads, const ModelParams& init,
                  const TrainConfig& cfg, const EpochCallback& callback) {
    cfg.validate();
    DDTM_REQUIRE(!train_threads.empty(), "training split is empty");

    TrainResult result;
    result.params = apply_variant(init, cfg.variant);
    const BlockMask mask = variant_mask(cfg.variant);
    const int vocab = result.params.vocab_size();
    AdamState adam = AdamState::init(vocab, result.params.cfg.comment_bits,
                                     result.params.cfg.thread_bits, cfg.adam);

    // warm-start cache of posterior states, one slot per training thread
    std::vector<PosteriorMF> psi_cache(train_threads.size());
    std::vector<bool> cached(train_threads.size(), false);

    const int n = static_cast<int>(train_threads.size());
    const int batch_size = std::max(cfg.minibatch, cfg.workers);
    double best_heldout = -std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;
    result.best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<int> order(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
        Rng epoch_rng = Rng::derive(cfg.seed, 1000 + static_cast<uint64_t>(epoch));
        epoch_rng.shuffle(order);

        EpochDiagnostics diag;
        diag.epoch = epoch;
        double ll_sum = 0.0;

        for (int start = 0; start < n; start += batch_size) {
            int count = std::min(batch_size, n - start);
            std::vector<GradEstimate> grads(static_cast<size_t>(count));
            std::vector<double> lls(static_cast<size_t>(count));

            parallel_for(count, cfg.workers, [&](int j) {
                int idx = order[static_cast<size_t>(start + j)];
                const Thread& t = *train_threads[static_cast<size_t>(idx)];
                const PosteriorMF* warm = cached[static_cast<size_t>(idx)]
                                              ? &psi_cache[static_cast<size_t>(idx)]
                                              : nullptr;
                PosteriorMF posterior = fit_posterior(t, result.params, cfg.schedule, warm);
                JointMF joint = fit_joint(t, result.params, cfg.schedule, &posterior);
                grads[static_cast<size_t>(j)] = grad_estimate(t, result.params, posterior, joint);
                lls[static_cast<size_t>(j)] = posterior.bound - joint.bound;
                psi_cache[static_cast<size_t>(idx)] = std::move(posterior);
                cached[static_cast<size_t>(idx)] = true;
            });

            GradEstimate total = std::move(grads[0]);
            for (int j = 1; j < count; ++j) accumulate(total, grads[static_cast<size_t>(j)]);
            for (int j = 0; j < count; ++j) ll_sum += lls[static_cast<size_t>(j)];
            diag.threads_seen += count;

            if (cfg.grad_clip) {
                double norm = grad_l2_norm(total);
                if (norm > *cfg.grad_clip && norm > 0.0) {
                    double scale = *cfg.grad_clip / norm;
                    total.for_each([&](auto& blk) { blk *= scale; });
                }
            }
            if (!adam_step(result.params, adam, total, mask)) {
                ++diag.rejected_steps;
            }
        }

        diag.mean_approx_ll = ll_sum / static_cast<double>(n);
        if (!heldout_threads.empty()) {
            diag.heldout_approx_ll =
                mean_approx_log_likelihood(heldout_threads, result.params, cfg.schedule, cfg.workers);
        }
        diag.wallclock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.diagnostics.push_back(diag);
        if (callback &&
            (epoch == cfg.epochs || (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0))) {
            callback(epoch, result.params, diag);
        }

        if (!heldout_threads.empty() && cfg.early_stop) {
            if (diag.heldout_approx_ll > best_heldout) {
                best_heldout = diag.heldout_approx_ll;
                result.best_epoch = epoch;
                epochs_since_best = 0;
            } else if (++epochs_since_best >= cfg.patience) {
                break;
            }
        }
    }
    return result;
}

}  // namespace ddtm
