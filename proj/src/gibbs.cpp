#include "ddtm/gibbs.hpp"

namespace ddtm {

namespace {

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

}  // namespace

GibbsSampler::GibbsSampler(const ThreadShape& shape, const ModelParams& params)
    : shape_(shape), params_(params), children_(shape.parents.size()) {
    for (size_t n = 0; n < shape.parents.size(); ++n) {
        int p = shape.parents[n];
        if (p >= 0) children_[static_cast<size_t>(p)].push_back(static_cast<int>(n));
    }
    counts_ = MatrixXd::Zero(params.vocab_size(), shape.size());
    h_ = MatrixXd::Zero(params.cfg.comment_bits, shape.size());
    h0_ = VectorXd::Zero(params.cfg.thread_bits);
}

VectorXd GibbsSampler::comment_bias_pre(int n) const {
    const ParamBlocks& p = params_.blocks;
    double dn = static_cast<double>(shape_.lengths[static_cast<size_t>(n)]);
    VectorXd pre = dn * p.b;
    if (shape_.parents[static_cast<size_t>(n)] < 0) pre += p.b_start;
    if (children_[static_cast<size_t>(n)].empty()) pre += p.b_stop;
    return pre;
}

void GibbsSampler::init_from_base(Rng& rng) {
    const ParamBlocks& p = params_.blocks;
    const int vocab = params_.vocab_size();
    double total_words = 0.0;
    VectorXd word_dist = softmax(p.a);
    counts_.setZero();
    for (int n = 0; n < shape_.size(); ++n) {
        total_words += static_cast<double>(shape_.lengths[static_cast<size_t>(n)]);
        for (int64_t d = 0; d < shape_.lengths[static_cast<size_t>(n)]; ++d) {
            counts_(rng.categorical(word_dist), n) += 1.0;
        }
        VectorXd pre = comment_bias_pre(n);
        for (int f = 0; f < params_.cfg.comment_bits; ++f) {
            h_(f, n) = rng.bernoulli(sigmoid(pre[f])) ? 1.0 : 0.0;
        }
    }
    if (thread_clamp_) {
        h0_ = *thread_clamp_;
    } else {
        for (int f = 0; f < params_.cfg.thread_bits; ++f) {
            h0_[f] = rng.bernoulli(sigmoid(total_words * p.c[f])) ? 1.0 : 0.0;
        }
    }
    (void)vocab;
}

VectorXd GibbsSampler::word_distribution(int n) const {
    const ParamBlocks& p = params_.blocks;
    VectorXd logits = p.a;
    if (params_.cfg.comment_bits > 0)
        logits.noalias() += beta_ * (p.U.transpose() * h_.col(n));
    if (params_.cfg.thread_bits > 0) logits.noalias() += beta_ * (p.V.transpose() * h0_);
    return softmax(logits);
}

void GibbsSampler::resample_words(int n, Rng& rng) {
    VectorXd dist = word_distribution(n);
    counts_.col(n).setZero();
    for (int64_t d = 0; d < shape_.lengths[static_cast<size_t>(n)]; ++d) {
        counts_(rng.categorical(dist), n) += 1.0;
    }
}

VectorXd GibbsSampler::comment_bit_probs(int n) const {
    const ParamBlocks& p = params_.blocks;
    VectorXd pre = comment_bias_pre(n);
    pre.noalias() += beta_ * (p.U * counts_.col(n));
    for (int m : children_[static_cast<size_t>(n)]) {
        pre.noalias() += beta_ * (p.W * h_.col(m));
    }
    int parent = shape_.parents[static_cast<size_t>(n)];
    if (parent >= 0) pre.noalias() += beta_ * (p.W.transpose() * h_.col(parent));
    VectorXd probs(pre.size());
    for (Eigen::Index f = 0; f < pre.size(); ++f) probs[f] = sigmoid(pre[f]);
    return probs;
}

void GibbsSampler::resample_comment_bits(int n, Rng& rng) {
    VectorXd probs = comment_bit_probs(n);
    for (Eigen::Index f = 0; f < probs.size(); ++f) {
        h_(f, n) = rng.bernoulli(probs[f]) ? 1.0 : 0.0;
    }
}

VectorXd GibbsSampler::thread_bit_probs() const {
    const ParamBlocks& p = params_.blocks;
    double total_words = 0.0;
    for (int64_t d : shape_.lengths) total_words += static_cast<double>(d);
    VectorXd pre = total_words * p.c;
    if (params_.cfg.thread_bits > 0) {
        pre.noalias() += beta_ * (p.V * counts_.rowwise().sum());
    }
    VectorXd probs(pre.size());
    for (Eigen::Index f = 0; f < pre.size(); ++f) probs[f] = sigmoid(pre[f]);
    return probs;
}

void GibbsSampler::resample_thread_bits(Rng& rng) {
    if (thread_clamp_) return;
    VectorXd probs = thread_bit_probs();
    for (Eigen::Index f = 0; f < probs.size(); ++f) {
        h0_[f] = rng.bernoulli(probs[f]) ? 1.0 : 0.0;
    }
}

void GibbsSampler::sweep(Rng& rng) {
    for (int n = 0; n < shape_.size(); ++n) resample_words(n, rng);
    for (int n = 0; n < shape_.size(); ++n) resample_comment_bits(n, rng);
    resample_thread_bits(rng);
}

void GibbsSampler::sweep(Rng& rng, int count) {
    for (int i = 0; i < count; ++i) sweep(rng);
}

double GibbsSampler::interaction_energy() const {
    const ParamBlocks& p = params_.blocks;
    double e = 0.0;
    for (int n = 0; n < shape_.size(); ++n) {
        if (params_.cfg.comment_bits > 0) e += h_.col(n).dot(p.U * counts_.col(n));
        if (params_.cfg.thread_bits > 0) e += h0_.dot(p.V * counts_.col(n));
    }
    for (size_t n = 0; n < shape_.parents.size(); ++n) {
        int parent = shape_.parents[n];
        if (parent >= 0) {
            e += h_.col(parent).dot(p.W * h_.col(static_cast<Eigen::Index>(n)));
        }
    }
    return e;
}

double GibbsSampler::base_log_z(const ThreadShape& shape, const ModelParams& params) {
    const ParamBlocks& p = params.blocks;
    double lse_a = log_sum_exp(p.a);
    double total_words = 0.0;
    double log_z = 0.0;
    std::vector<bool> has_child(shape.parents.size(), false);
    for (int parent : shape.parents) {
        if (parent >= 0) has_child[static_cast<size_t>(parent)] = true;
    }
    for (size_t n = 0; n < shape.parents.size(); ++n) {
        double dn = static_cast<double>(shape.lengths[n]);
        total_words += dn;
        log_z += dn * lse_a;
        VectorXd pre = dn * p.b;
        if (shape.parents[n] < 0) pre += p.b_start;
        if (!has_child[n]) pre += p.b_stop;
        for (Eigen::Index f = 0; f < pre.size(); ++f) log_z += softplus(pre[f]);
    }
    for (Eigen::Index f = 0; f < p.c.size(); ++f) log_z += softplus(total_words * p.c[f]);
    return log_z;
}

}  // namespace ddtm
