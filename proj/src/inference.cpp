#include "ddtm/inference.hpp"

#include <algorithm>

namespace ddtm {

namespace {

double clamp_prob(double p) { return std::min(1.0 - kProbClamp, std::max(kProbClamp, p)); }

VectorXd clamped_sigmoid(const VectorXd& pre) {
    VectorXd out(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) out[i] = clamp_prob(sigmoid(pre[i]));
    return out;
}

// Boundary biases plus D_n-scaled comment-bit bias for one comment.
VectorXd bias_pre(const CommentBag& bag, const ParamBlocks& p) {
    VectorXd pre = static_cast<double>(bag.length) * p.b;
    if (!bag.parent) pre += p.b_start;
    if (bag.children.empty()) pre += p.b_stop;
    return pre;
}

// W * sum of child columns + W' * parent column of a bit-mean matrix.
VectorXd coupling_pre(const Thread& t, const ParamBlocks& p, const MatrixXd& bits, int n) {
    const CommentBag& bag = t.comments[static_cast<size_t>(n)];
    VectorXd pre = VectorXd::Zero(p.comment_bits());
    if (!bag.children.empty()) {
        VectorXd child_sum = VectorXd::Zero(p.comment_bits());
        for (int m : bag.children) child_sum += bits.col(m);
        pre += p.W * child_sum;
    }
    if (bag.parent) pre += p.W.transpose() * bits.col(*bag.parent);
    return pre;
}

double max_abs_diff(const VectorXd& a, const VectorXd& b) {
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TreeOrder TreeOrder::of(const Thread& t) {
    TreeOrder order;
    order.depth.assign(static_cast<size_t>(t.size()), 0);
    int max_depth = 0;
    for (int n = 0; n < t.size(); ++n) {
        const auto& parent = t.comments[static_cast<size_t>(n)].parent;
        if (parent) {
            order.depth[static_cast<size_t>(n)] = order.depth[static_cast<size_t>(*parent)] + 1;
            max_depth = std::max(max_depth, order.depth[static_cast<size_t>(n)]);
        }
    }
    order.levels.assign(static_cast<size_t>(max_depth) + 1, {});
    for (int n = 0; n < t.size(); ++n) {
        order.levels[static_cast<size_t>(order.depth[static_cast<size_t>(n)])].push_back(n);
    }
    return order;
}

// --- single-coordinate updates ----------------------------------------------

double update_psi(const Thread& t, const ModelParams& p, PosteriorMF& s, int n) {
    const CommentBag& bag = t.comments[static_cast<size_t>(n)];
    VectorXd pre = emission_times_counts(p.blocks.U, bag) + bias_pre(bag, p.blocks) +
                   coupling_pre(t, p.blocks, s.psi, n);
    VectorXd fresh = clamped_sigmoid(pre);
    double delta = max_abs_diff(fresh, s.psi.col(n));
    s.psi.col(n) = fresh;
    return delta;
}

double update_psi0(const Thread& t, const ModelParams& p, PosteriorMF& s) {
    VectorXd pre = VectorXd::Zero(p.blocks.thread_bits());
    double total_words = 0.0;
    for (const auto& bag : t.comments) {
        pre += emission_times_counts(p.blocks.V, bag);
        total_words += static_cast<double>(bag.length);
    }
    pre += total_words * p.blocks.c;
    VectorXd fresh = clamped_sigmoid(pre);
    double delta = max_abs_diff(fresh, s.psi0);
    s.psi0 = fresh;
    return delta;
}

double update_phi(const Thread& t, const ModelParams& p, JointMF& s, int n) {
    const CommentBag& bag = t.comments[static_cast<size_t>(n)];
    double dn = static_cast<double>(bag.length);
    VectorXd pre = dn * (p.blocks.U * s.gamma.col(n)) + bias_pre(bag, p.blocks) +
                   coupling_pre(t, p.blocks, s.phi, n);
    VectorXd fresh = clamped_sigmoid(pre);
    double delta = max_abs_diff(fresh, s.phi.col(n));
    s.phi.col(n) = fresh;
    return delta;
}

double update_phi0(const Thread& t, const ModelParams& p, JointMF& s) {
    VectorXd pre = VectorXd::Zero(p.blocks.thread_bits());
    double total_words = 0.0;
    for (int n = 0; n < t.size(); ++n) {
        double dn = static_cast<double>(t.comments[static_cast<size_t>(n)].length);
        if (dn > 0.0) pre += dn * (p.blocks.V * s.gamma.col(n));
        total_words += dn;
    }
    pre += total_words * p.blocks.c;
    VectorXd fresh = clamped_sigmoid(pre);
    double delta = max_abs_diff(fresh, s.phi0);
    s.phi0 = fresh;
    return delta;
}

double update_gamma(const Thread& t, const ModelParams& p, JointMF& s, int n) {
    VectorXd pre = p.blocks.a;
    pre.noalias() += p.blocks.U.transpose() * s.phi.col(n);
    pre.noalias() += p.blocks.V.transpose() * s.phi0;
    VectorXd fresh = softmax(pre);
    double delta = max_abs_diff(fresh, s.gamma.col(n));
    s.gamma.col(n) = fresh;
    return delta;
}

// --- bounds -------------------------------------------------------------------

namespace {

// Expected energy under factorized bit means, with per-comment expected counts
// supplied by a callback (observed x_n for the posterior, D_n * gamma_n for
// the joint approximation).
template <typename CountTerm>
double expected_energy(const Thread& t, const ParamBlocks& p, const MatrixXd& bits,
                       const VectorXd& bits0, CountTerm&& count_term) {
    double e = 0.0;
    for (int n = 0; n < t.size(); ++n) {
        const CommentBag& bag = t.comments[static_cast<size_t>(n)];
        double dn = static_cast<double>(bag.length);
        e += count_term(n, bits.col(n), bits0);
        e += dn * bits.col(n).dot(p.b);
        e += dn * bits0.dot(p.c);
        if (!bag.parent) e += bits.col(n).dot(p.b_start);
        if (bag.children.empty()) e += bits.col(n).dot(p.b_stop);
    }
    for (auto& [parent, child] : t.reply_edges) {
        e += bits.col(parent).dot(p.W * bits.col(child));
    }
    return e;
}

double bernoulli_entropy_sum(const MatrixXd& m) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) h += bernoulli_entropy(m(i, j));
    }
    return h;
}

double bernoulli_entropy_sum(const VectorXd& v) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) h += bernoulli_entropy(v[i]);
    return h;
}

}  // namespace

double elbo_posterior(const Thread& t, const ModelParams& p, const PosteriorMF& s) {
    const ParamBlocks& blocks = p.blocks;
    double e = expected_energy(
        t, blocks, s.psi, s.psi0,
        [&](int n, const auto& psi_n, const VectorXd& psi0) {
            const CommentBag& bag = t.comments[static_cast<size_t>(n)];
            double term = psi_n.dot(emission_times_counts(blocks.U, bag));
            term += psi0.dot(emission_times_counts(blocks.V, bag));
            for (auto& [k, cnt] : bag.counts) term += static_cast<double>(cnt) * blocks.a[k];
            return term;
        });
    return e + bernoulli_entropy_sum(s.psi) + bernoulli_entropy_sum(s.psi0);
}

double elbo_joint(const Thread& t, const ModelParams& p, const JointMF& s) {
    const ParamBlocks& blocks = p.blocks;
    double e = expected_energy(
        t, blocks, s.phi, s.phi0,
        [&](int n, const auto& phi_n, const VectorXd& phi0) {
            double dn = static_cast<double>(t.comments[static_cast<size_t>(n)].length);
            if (dn == 0.0) return 0.0;
            const auto& gamma_n = s.gamma.col(n);
            double term = phi_n.dot(blocks.U * gamma_n);
            term += phi0.dot(blocks.V * gamma_n);
            term += blocks.a.dot(gamma_n);
            return dn * term;
        });
    double word_entropy = 0.0;
    for (int n = 0; n < t.size(); ++n) {
        double dn = static_cast<double>(t.comments[static_cast<size_t>(n)].length);
        if (dn > 0.0) word_entropy += dn * categorical_entropy(s.gamma.col(n));
    }
    return e + word_entropy + bernoulli_entropy_sum(s.phi) + bernoulli_entropy_sum(s.phi0);
}

// --- batched fits -------------------------------------------------------------

namespace {

// Flat view over a batch of threads for level-synchronized sweeps.
struct BatchLayout {
    std::vector<const Thread*> threads;
    std::vector<TreeOrder> orders;
    std::vector<int> offset;  // global column index of each thread's comment 0
    int total_comments = 0;
    int max_depth = 0;

    explicit BatchLayout(const std::vector<const Thread*>& ts) : threads(ts) {
        offset.reserve(ts.size());
        for (const Thread* t : ts) {
            offset.push_back(total_comments);
            orders.push_back(TreeOrder::of(*t));
            total_comments += t->size();
            max_depth = std::max(max_depth, static_cast<int>(orders.back().levels.size()) - 1);
        }
    }
};

// One level of one active thread: update bit means via dense products.
void update_bits_level(const Thread& t, const ParamBlocks& p, const std::vector<int>& level,
                       const MatrixXd& emission_pre, Eigen::Ref<MatrixXd> bits, double* delta) {
    const int fc = p.comment_bits();
    const int count = static_cast<int>(level.size());
    if (fc == 0 || count == 0) return;

    MatrixXd neighbor = MatrixXd::Zero(fc, count);
    MatrixXd child_sum = MatrixXd::Zero(fc, count);
    MatrixXd parent_bits = MatrixXd::Zero(fc, count);
    bool any_child = false, any_parent = false;
    for (int j = 0; j < count; ++j) {
        const CommentBag& bag = t.comments[static_cast<size_t>(level[static_cast<size_t>(j)])];
        for (int m : bag.children) {
            child_sum.col(j) += bits.col(m);
            any_child = true;
        }
        if (bag.parent) {
            parent_bits.col(j) = bits.col(*bag.parent);
            any_parent = true;
        }
    }
    if (any_child) neighbor.noalias() += p.W * child_sum;
    if (any_parent) neighbor.noalias() += p.W.transpose() * parent_bits;

    for (int j = 0; j < count; ++j) {
        int n = level[static_cast<size_t>(j)];
        VectorXd fresh = clamped_sigmoid(emission_pre.col(n) + neighbor.col(j));
        *delta = std::max(*delta, max_abs_diff(fresh, bits.col(n)));
        bits.col(n) = fresh;
    }
}

}  // namespace

std::vector<PosteriorMF> fit_posterior_batch(const std::vector<const Thread*>& threads,
                                             const ModelParams& p, const MFSchedule& sched,
                                             const std::vector<const PosteriorMF*>* warm) {
    sched.validate();
    const int fc = p.blocks.comment_bits();
    BatchLayout layout(threads);

    std::vector<PosteriorMF> states(threads.size());
    std::vector<MatrixXd> emission_pre(threads.size());
    std::vector<bool> active(threads.size(), true);

    for (size_t i = 0; i < threads.size(); ++i) {
        const Thread& t = *threads[i];
        PosteriorMF& s = states[i];
        if (warm && (*warm)[i]) {
            s.psi = (*warm)[i]->psi;
            s.psi0 = (*warm)[i]->psi0;
        } else {
            s.psi = MatrixXd::Constant(fc, t.size(), 0.5);
            s.psi0 = VectorXd::Constant(p.blocks.thread_bits(), 0.5);
        }
        // U x_n + D_n b + boundary biases; constant throughout the fit
        MatrixXd pre(fc, t.size());
        for (int n = 0; n < t.size(); ++n) {
            const CommentBag& bag = t.comments[static_cast<size_t>(n)];
            pre.col(n) = emission_times_counts(p.blocks.U, bag) + bias_pre(bag, p.blocks);
        }
        emission_pre[i] = std::move(pre);
    }

    for (int sweep = 0; sweep < sched.max_sweeps; ++sweep) {
        bool any_active = false;
        std::vector<double> delta(threads.size(), 0.0);
        // upward: deepest level first, then downward in reverse
        for (int d = layout.max_depth; d >= 0; --d) {
            for (size_t i = 0; i < threads.size(); ++i) {
                if (!active[i] || d >= static_cast<int>(layout.orders[i].levels.size())) continue;
                update_bits_level(*threads[i], p.blocks, layout.orders[i].levels[static_cast<size_t>(d)],
                                  emission_pre[i], states[i].psi, &delta[i]);
            }
        }
        for (int d = 0; d <= layout.max_depth; ++d) {
            for (size_t i = 0; i < threads.size(); ++i) {
                if (!active[i] || d >= static_cast<int>(layout.orders[i].levels.size())) continue;
                update_bits_level(*threads[i], p.blocks, layout.orders[i].levels[static_cast<size_t>(d)],
                                  emission_pre[i], states[i].psi, &delta[i]);
            }
        }
        for (size_t i = 0; i < threads.size(); ++i) {
            if (!active[i]) continue;
            delta[i] = std::max(delta[i], update_psi0(*threads[i], p, states[i]));
            states[i].sweeps = sweep + 1;
            if (delta[i] < sched.tolerance) {
                active[i] = false;
            } else {
                any_active = true;
            }
        }
        if (!any_active) break;
    }

    for (size_t i = 0; i < threads.size(); ++i) {
        states[i].bound = elbo_posterior(*threads[i], p, states[i]);
    }
    return states;
}

std::vector<JointMF> fit_joint_batch(const std::vector<const Thread*>& threads,
                                     const ModelParams& p, const MFSchedule& sched,
                                     const std::vector<const PosteriorMF*>* warm_psi) {
    sched.validate();
    const int fc = p.blocks.comment_bits();
    const int vocab = p.blocks.vocab_size();
    BatchLayout layout(threads);

    std::vector<JointMF> states(threads.size());
    std::vector<bool> active(threads.size(), true);

    for (size_t i = 0; i < threads.size(); ++i) {
        const Thread& t = *threads[i];
        JointMF& s = states[i];
        if (sched.init_phi_from_psi && warm_psi && (*warm_psi)[i]) {
            s.phi = (*warm_psi)[i]->psi;
            s.phi0 = (*warm_psi)[i]->psi0;
        } else {
            s.phi = MatrixXd::Constant(fc, t.size(), 0.5);
            s.phi0 = VectorXd::Constant(p.blocks.thread_bits(), 0.5);
        }
        s.gamma = MatrixXd::Constant(vocab, t.size(), 1.0 / static_cast<double>(vocab));
    }

    for (int sweep = 0; sweep < sched.max_sweeps; ++sweep) {
        bool any_active = false;
        for (size_t i = 0; i < threads.size(); ++i) {
            if (!active[i]) continue;
            const Thread& t = *threads[i];
            JointMF& s = states[i];
            double delta = 0.0;

            // phi sweep against the current gamma: D_n (U gamma_n + b) + bounds
            MatrixXd emission_pre(fc, t.size());
            if (fc > 0) {
                emission_pre.noalias() = p.blocks.U * s.gamma;
                for (int n = 0; n < t.size(); ++n) {
                    const CommentBag& bag = t.comments[static_cast<size_t>(n)];
                    double dn = static_cast<double>(bag.length);
                    emission_pre.col(n) = dn * emission_pre.col(n) + bias_pre(bag, p.blocks);
                }
            }
            const auto& levels = layout.orders[i].levels;
            for (int d = static_cast<int>(levels.size()) - 1; d >= 0; --d) {
                update_bits_level(t, p.blocks, levels[static_cast<size_t>(d)], emission_pre, s.phi,
                                  &delta);
            }
            for (size_t d = 0; d < levels.size(); ++d) {
                update_bits_level(t, p.blocks, levels[d], emission_pre, s.phi, &delta);
            }
            delta = std::max(delta, update_phi0(t, p, s));

            // simultaneous gamma refresh: softmax(U' phi_n + V' phi0 + a)
            MatrixXd pre = MatrixXd::Zero(vocab, t.size());
            if (fc > 0) pre.noalias() += p.blocks.U.transpose() * s.phi;
            if (p.blocks.thread_bits() > 0) {
                pre.colwise() += (p.blocks.V.transpose() * s.phi0).eval();
            }
            pre.colwise() += p.blocks.a;
            for (int n = 0; n < t.size(); ++n) {
                VectorXd fresh = softmax(pre.col(n));
                delta = std::max(delta, max_abs_diff(fresh, s.gamma.col(n)));
                s.gamma.col(n) = fresh;
            }

            s.sweeps = sweep + 1;
            if (delta < sched.tolerance) {
                active[i] = false;
            } else {
                any_active = true;
            }
        }
        if (!any_active) break;
    }

    for (size_t i = 0; i < threads.size(); ++i) {
        states[i].bound = elbo_joint(*threads[i], p, states[i]);
    }
    return states;
}

PosteriorMF fit_posterior(const Thread& t, const ModelParams& p, const MFSchedule& sched,
                          const PosteriorMF* warm) {
    std::vector<const Thread*> one{&t};
    std::vector<const PosteriorMF*> warms{warm};
    return std::move(fit_posterior_batch(one, p, sched, warm ? &warms : nullptr)[0]);
}

JointMF fit_joint(const Thread& t, const ModelParams& p, const MFSchedule& sched,
                  const PosteriorMF* warm_psi) {
    std::vector<const Thread*> one{&t};
    std::vector<const PosteriorMF*> warms{warm_psi};
    return std::move(fit_joint_batch(one, p, sched, warm_psi ? &warms : nullptr)[0]);
}

double approx_log_likelihood(const Thread& t, const ModelParams& p, const MFSchedule& sched) {
    PosteriorMF posterior = fit_posterior(t, p, sched);
    JointMF joint = fit_joint(t, p, sched, &posterior);
    return posterior.bound - joint.bound;
}

}  // namespace ddtm
