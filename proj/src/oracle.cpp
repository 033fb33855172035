#include "ddtm/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace ddtm {

namespace {

struct ShapeInfo {
    std::vector<int> parents;
    std::vector<int64_t> lengths;
    std::vector<std::vector<int>> children;
    std::vector<std::pair<int, int>> edges;

    explicit ShapeInfo(const ThreadShape& shape)
        : parents(shape.parents), lengths(shape.lengths), children(shape.parents.size()) {
        for (size_t n = 0; n < parents.size(); ++n) {
            int p = parents[n];
            if (p >= 0) {
                children[static_cast<size_t>(p)].push_back(static_cast<int>(n));
                edges.emplace_back(p, static_cast<int>(n));
            }
        }
        std::sort(edges.begin(), edges.end());
    }

    int size() const { return static_cast<int>(parents.size()); }
    bool is_root(int n) const { return parents[static_cast<size_t>(n)] < 0; }
    bool is_leaf(int n) const { return children[static_cast<size_t>(n)].empty(); }
};

// All binary patterns over `bits` as dense vectors, indexed by their integer
// encoding (bit f of the index = component f).
std::vector<VectorXd> bit_patterns(int bits) {
    size_t count = size_t{1} << bits;
    std::vector<VectorXd> out(count);
    for (size_t i = 0; i < count; ++i) {
        VectorXd v = VectorXd::Zero(bits);
        for (int f = 0; f < bits; ++f) {
            if (i >> f & 1) v[f] = 1.0;
        }
        out[i] = std::move(v);
    }
    return out;
}

double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

// Enumerates every (h_1..h_N, h0) assignment. per_comment(n, ci, ti) supplies
// the per-comment score; the coupling table adds h_p' W h_c per edge. visit
// receives the total score and the assignment encoding.
template <typename PerComment, typename Visit>
void enumerate_assignments(const ShapeInfo& info, int fc, int ft, PerComment&& per_comment,
                           const MatrixXd& coupling, Visit&& visit) {
    const int n_comments = info.size();
    const size_t c_patterns = size_t{1} << fc;
    const size_t t_patterns = size_t{1} << ft;
    std::vector<size_t> ci(static_cast<size_t>(n_comments), 0);

    for (size_t ti = 0; ti < t_patterns; ++ti) {
        std::fill(ci.begin(), ci.end(), 0);
        while (true) {
            double score = 0.0;
            for (int n = 0; n < n_comments; ++n) {
                score += per_comment(n, ci[static_cast<size_t>(n)], ti);
            }
            for (auto& [p, c] : info.edges) {
                score += coupling(static_cast<Eigen::Index>(ci[static_cast<size_t>(p)]),
                                  static_cast<Eigen::Index>(ci[static_cast<size_t>(c)]));
            }
            visit(score, ci, ti);

            int digit = 0;
            while (digit < n_comments) {
                if (++ci[static_cast<size_t>(digit)] < c_patterns) break;
                ci[static_cast<size_t>(digit)] = 0;
                ++digit;
            }
            if (digit == n_comments) break;
        }
    }
}

MatrixXd coupling_table(const ParamBlocks& p, const std::vector<VectorXd>& patterns) {
    const auto n = static_cast<Eigen::Index>(patterns.size());
    MatrixXd table(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            table(i, j) = patterns[static_cast<size_t>(i)].dot(p.W * patterns[static_cast<size_t>(j)]);
        }
    }
    return table;
}

// D_n-scaled bit biases plus boundary biases; shared by both enumerations.
double bias_score(const ShapeInfo& info, const ParamBlocks& p, int n, const VectorXd& hc,
                  const VectorXd& ht) {
    double dn = static_cast<double>(info.lengths[static_cast<size_t>(n)]);
    double s = dn * hc.dot(p.b) + dn * ht.dot(p.c);
    if (info.is_root(n)) s += hc.dot(p.b_start);
    if (info.is_leaf(n)) s += hc.dot(p.b_stop);
    return s;
}

void check_budget(const ThreadShape& shape, const ModelParams& params, double log2_limit) {
    double cost = enumeration_log2_cost(shape, params.vocab_size(), params.cfg.comment_bits,
                                        params.cfg.thread_bits);
    if (cost > log2_limit) {
        throw NumericError("enumeration state space 2^" + std::to_string(cost) +
                           " exceeds limit 2^" + std::to_string(log2_limit));
    }
}

// Per-comment word logits a + U'h_n + V'h0 for every bit pattern combination.
std::vector<std::vector<VectorXd>> word_logit_tables(const ShapeInfo& info, const ParamBlocks& p,
                                                     const std::vector<VectorXd>& cpat,
                                                     const std::vector<VectorXd>& tpat) {
    // indexed [ci][ti]; shared across comments since logits do not depend on n
    std::vector<std::vector<VectorXd>> table(cpat.size(), std::vector<VectorXd>(tpat.size()));
    for (size_t ci = 0; ci < cpat.size(); ++ci) {
        for (size_t ti = 0; ti < tpat.size(); ++ti) {
            VectorXd logits = p.a;
            logits.noalias() += p.U.transpose() * cpat[ci];
            logits.noalias() += p.V.transpose() * tpat[ti];
            table[ci][ti] = logits;
        }
    }
    return table;
}

}  // namespace

double enumeration_log2_cost(const ThreadShape& shape, int vocab, int comment_bits,
                             int thread_bits) {
    double words = 0.0;
    for (int64_t d : shape.lengths) words += static_cast<double>(d);
    double log2_words = words * std::log2(static_cast<double>(std::max(vocab, 1)));
    double log2_bits =
        static_cast<double>(shape.size()) * comment_bits + static_cast<double>(thread_bits);
    return log2_words + log2_bits;
}

double exact_log_z(const ThreadShape& shape, const ModelParams& params, double log2_limit) {
    check_budget(shape, params, log2_limit);
    const ParamBlocks& p = params.blocks;
    ShapeInfo info(shape);
    auto cpat = bit_patterns(params.cfg.comment_bits);
    auto tpat = bit_patterns(params.cfg.thread_bits);
    auto logits = word_logit_tables(info, p, cpat, tpat);
    MatrixXd coupling = coupling_table(p, cpat);

    // log sum over word sequences given bits: D_n * logsumexp(logits)
    std::vector<std::vector<double>> word_lse(cpat.size(), std::vector<double>(tpat.size()));
    for (size_t ci = 0; ci < cpat.size(); ++ci) {
        for (size_t ti = 0; ti < tpat.size(); ++ti) {
            word_lse[ci][ti] = log_sum_exp(logits[ci][ti]);
        }
    }

    double acc = -std::numeric_limits<double>::infinity();
    enumerate_assignments(
        info, params.cfg.comment_bits, params.cfg.thread_bits,
        [&](int n, size_t ci, size_t ti) {
            double dn = static_cast<double>(info.lengths[static_cast<size_t>(n)]);
            return dn * word_lse[ci][ti] + bias_score(info, p, n, cpat[ci], tpat[ti]);
        },
        coupling,
        [&](double score, const std::vector<size_t>&, size_t) { acc = log_add(acc, score); });
    return acc;
}

namespace {

// Observed-energy table entries h_n'U x_n + x_n'a + h0'V x_n + biases.
std::vector<std::vector<std::vector<double>>> observed_tables(const Thread& t,
                                                              const ShapeInfo& info,
                                                              const ParamBlocks& p,
                                                              const std::vector<VectorXd>& cpat,
                                                              const std::vector<VectorXd>& tpat) {
    std::vector<std::vector<std::vector<double>>> table(
        static_cast<size_t>(t.size()),
        std::vector<std::vector<double>>(cpat.size(), std::vector<double>(tpat.size())));
    for (int n = 0; n < t.size(); ++n) {
        const CommentBag& bag = t.comments[static_cast<size_t>(n)];
        VectorXd ux = emission_times_counts(p.U, bag);
        VectorXd vx = emission_times_counts(p.V, bag);
        double ax = 0.0;
        for (auto& [k, cnt] : bag.counts) ax += static_cast<double>(cnt) * p.a[k];
        for (size_t ci = 0; ci < cpat.size(); ++ci) {
            for (size_t ti = 0; ti < tpat.size(); ++ti) {
                table[static_cast<size_t>(n)][ci][ti] = cpat[ci].dot(ux) + tpat[ti].dot(vx) + ax +
                                                        bias_score(info, p, n, cpat[ci], tpat[ti]);
            }
        }
    }
    return table;
}

}  // namespace

double exact_marginal_energy(const Thread& t, const ModelParams& params, double log2_limit) {
    ThreadShape shape = ThreadShape::of(t);
    check_budget(shape, params, log2_limit);
    const ParamBlocks& p = params.blocks;
    ShapeInfo info(shape);
    auto cpat = bit_patterns(params.cfg.comment_bits);
    auto tpat = bit_patterns(params.cfg.thread_bits);
    auto table = observed_tables(t, info, p, cpat, tpat);
    MatrixXd coupling = coupling_table(p, cpat);

    double acc = -std::numeric_limits<double>::infinity();
    enumerate_assignments(
        info, params.cfg.comment_bits, params.cfg.thread_bits,
        [&](int n, size_t ci, size_t ti) { return table[static_cast<size_t>(n)][ci][ti]; },
        coupling,
        [&](double score, const std::vector<size_t>&, size_t) { acc = log_add(acc, score); });
    return acc;
}

double exact_log_likelihood(const Thread& t, const ModelParams& params, double log2_limit) {
    return exact_marginal_energy(t, params, log2_limit) -
           exact_log_z(ThreadShape::of(t), params, log2_limit);
}

void exact_posterior_marginals(const Thread& t, const ModelParams& params, MatrixXd* comment_bits,
                               VectorXd* thread_bits, double log2_limit) {
    FeatureMoments m = exact_posterior_moments(t, params, log2_limit);
    if (comment_bits) *comment_bits = m.h;
    if (thread_bits) *thread_bits = m.h0;
}

FeatureMoments exact_posterior_moments(const Thread& t, const ModelParams& params,
                                       double log2_limit) {
    ThreadShape shape = ThreadShape::of(t);
    check_budget(shape, params, log2_limit);
    const ParamBlocks& p = params.blocks;
    const int fc = params.cfg.comment_bits;
    const int ft = params.cfg.thread_bits;
    const int vocab = params.vocab_size();
    ShapeInfo info(shape);
    auto cpat = bit_patterns(fc);
    auto tpat = bit_patterns(ft);
    auto table = observed_tables(t, info, p, cpat, tpat);
    MatrixXd coupling = coupling_table(p, cpat);

    auto per_comment = [&](int n, size_t ci, size_t ti) {
        return table[static_cast<size_t>(n)][ci][ti];
    };
    double log_norm = -std::numeric_limits<double>::infinity();
    enumerate_assignments(info, fc, ft, per_comment, coupling,
                          [&](double s, const std::vector<size_t>&, size_t) {
                              log_norm = log_add(log_norm, s);
                          });

    FeatureMoments m;
    m.h = MatrixXd::Zero(fc, t.size());
    m.h0 = VectorXd::Zero(ft);
    m.hh.assign(t.reply_edges.size(), MatrixXd::Zero(fc, fc));
    enumerate_assignments(info, fc, ft, per_comment, coupling,
                          [&](double s, const std::vector<size_t>& ci, size_t ti) {
                              double w = std::exp(s - log_norm);
                              for (int n = 0; n < t.size(); ++n) {
                                  m.h.col(n) += w * cpat[ci[static_cast<size_t>(n)]];
                              }
                              m.h0 += w * tpat[ti];
                              for (size_t e = 0; e < info.edges.size(); ++e) {
                                  auto& [pe, ce] = info.edges[e];
                                  m.hh[e] += w * cpat[ci[static_cast<size_t>(pe)]] *
                                             cpat[ci[static_cast<size_t>(ce)]].transpose();
                              }
                          });
    for (int n = 0; n < t.size(); ++n) {
        VectorXd x = dense_counts(t.comments[static_cast<size_t>(n)], vocab);
        m.x.push_back(x);
        m.hx.push_back(m.h.col(n) * x.transpose());
        m.h0x.push_back(m.h0 * x.transpose());
    }
    return m;
}

FeatureMoments exact_model_moments(const Thread& t, const ModelParams& params, double log2_limit) {
    ThreadShape shape = ThreadShape::of(t);
    check_budget(shape, params, log2_limit);
    const ParamBlocks& p = params.blocks;
    const int fc = params.cfg.comment_bits;
    const int ft = params.cfg.thread_bits;
    const int vocab = params.vocab_size();
    ShapeInfo info(shape);
    auto cpat = bit_patterns(fc);
    auto tpat = bit_patterns(ft);
    auto logits = word_logit_tables(info, p, cpat, tpat);
    MatrixXd coupling = coupling_table(p, cpat);

    std::vector<std::vector<double>> word_lse(cpat.size(), std::vector<double>(tpat.size()));
    std::vector<std::vector<VectorXd>> word_mean(cpat.size(), std::vector<VectorXd>(tpat.size()));
    for (size_t ci = 0; ci < cpat.size(); ++ci) {
        for (size_t ti = 0; ti < tpat.size(); ++ti) {
            word_lse[ci][ti] = log_sum_exp(logits[ci][ti]);
            word_mean[ci][ti] = softmax(logits[ci][ti]);
        }
    }

    auto per_comment = [&](int n, size_t ci, size_t ti) {
        double dn = static_cast<double>(info.lengths[static_cast<size_t>(n)]);
        return dn * word_lse[ci][ti] + bias_score(info, p, n, cpat[ci], tpat[ti]);
    };
    double log_norm = -std::numeric_limits<double>::infinity();
    enumerate_assignments(info, fc, ft, per_comment, coupling,
                          [&](double s, const std::vector<size_t>&, size_t) {
                              log_norm = log_add(log_norm, s);
                          });

    FeatureMoments m;
    m.h = MatrixXd::Zero(fc, t.size());
    m.h0 = VectorXd::Zero(ft);
    m.hh.assign(t.reply_edges.size(), MatrixXd::Zero(fc, fc));
    m.x.assign(static_cast<size_t>(t.size()), VectorXd::Zero(vocab));
    m.hx.assign(static_cast<size_t>(t.size()), MatrixXd::Zero(fc, vocab));
    m.h0x.assign(static_cast<size_t>(t.size()), MatrixXd::Zero(ft, vocab));

    enumerate_assignments(
        info, fc, ft, per_comment, coupling,
        [&](double s, const std::vector<size_t>& ci, size_t ti) {
            double w = std::exp(s - log_norm);
            m.h0 += w * tpat[ti];
            for (int n = 0; n < t.size(); ++n) {
                const size_t un = static_cast<size_t>(n);
                double dn = static_cast<double>(info.lengths[un]);
                const VectorXd& hc = cpat[ci[un]];
                m.h.col(n) += w * hc;
                if (dn > 0.0) {
                    VectorXd ex = dn * word_mean[ci[un]][ti];
                    m.x[un] += w * ex;
                    m.hx[un] += w * hc * ex.transpose();
                    m.h0x[un] += w * tpat[ti] * ex.transpose();
                }
            }
            for (size_t e = 0; e < info.edges.size(); ++e) {
                auto& [pe, ce] = info.edges[e];
                m.hh[e] += w * cpat[ci[static_cast<size_t>(pe)]] *
                           cpat[ci[static_cast<size_t>(ce)]].transpose();
            }
        });
    return m;
}

ExactThreadSampler::ExactThreadSampler(const ThreadShape& shape, const ModelParams& params,
                                       double log2_limit)
    : shape_(shape), params_(params), fc_(params.cfg.comment_bits), ft_(params.cfg.thread_bits) {
    double bit_cost =
        static_cast<double>(shape.size()) * fc_ + static_cast<double>(ft_);
    if (bit_cost > log2_limit) {
        throw NumericError("exact sampling needs 2^" + std::to_string(bit_cost) +
                           " bit assignments, above limit 2^" + std::to_string(log2_limit));
    }
    const ParamBlocks& p = params.blocks;
    ShapeInfo info(shape);
    auto cpat = bit_patterns(fc_);
    auto tpat = bit_patterns(ft_);
    auto logits = word_logit_tables(info, p, cpat, tpat);
    MatrixXd coupling = coupling_table(p, cpat);

    std::vector<std::vector<double>> word_lse(cpat.size(), std::vector<double>(tpat.size()));
    for (size_t ci = 0; ci < cpat.size(); ++ci) {
        for (size_t ti = 0; ti < tpat.size(); ++ti) word_lse[ci][ti] = log_sum_exp(logits[ci][ti]);
    }
    auto per_comment = [&](int n, size_t ci, size_t ti) {
        double dn = static_cast<double>(info.lengths[static_cast<size_t>(n)]);
        return dn * word_lse[ci][ti] + bias_score(info, p, n, cpat[ci], tpat[ti]);
    };

    std::vector<double> scores;
    if (bit_cost < 30.0) scores.reserve(size_t{1} << static_cast<int>(bit_cost));
    enumerate_assignments(info, fc_, ft_, per_comment, coupling,
                          [&](double s, const std::vector<size_t>&, size_t) {
                              scores.push_back(s);
                          });
    double log_norm = -std::numeric_limits<double>::infinity();
    for (double s : scores) log_norm = log_add(log_norm, s);
    log_z_ = log_norm;
    probs_.resize(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) probs_[i] = std::exp(scores[i] - log_norm);
}

ExactThreadSampler::Sample ExactThreadSampler::draw(Rng& rng) const {
    const int n_comments = shape_.size();
    const size_t c_patterns = size_t{1} << fc_;

    // flat index layout must match enumerate_assignments: comment digits vary
    // fastest (comment 0 is the innermost digit), thread pattern is outermost
    double u = rng.uniform();
    size_t flat = probs_.size() - 1;
    double acc = 0.0;
    for (size_t i = 0; i < probs_.size(); ++i) {
        acc += probs_[i];
        if (u < acc) {
            flat = i;
            break;
        }
    }
    size_t per_t = 1;
    for (int n = 0; n < n_comments; ++n) per_t *= c_patterns;
    size_t ti = flat / per_t;
    size_t rest = flat % per_t;
    std::vector<size_t> ci(static_cast<size_t>(n_comments));
    for (int n = 0; n < n_comments; ++n) {
        ci[static_cast<size_t>(n)] = rest % c_patterns;
        rest /= c_patterns;
    }

    Sample sample;
    sample.h = MatrixXd::Zero(fc_, n_comments);
    sample.h0 = VectorXd::Zero(ft_);
    for (int f = 0; f < ft_; ++f) {
        if (ti >> f & 1) sample.h0[f] = 1.0;
    }
    const ParamBlocks& p = params_.blocks;
    for (int n = 0; n < n_comments; ++n) {
        const size_t un = static_cast<size_t>(n);
        for (int f = 0; f < fc_; ++f) {
            if (ci[un] >> f & 1) sample.h(f, n) = 1.0;
        }
        VectorXd logits = p.a;
        logits.noalias() += p.U.transpose() * sample.h.col(n);
        logits.noalias() += p.V.transpose() * sample.h0;
        VectorXd dist = softmax(logits);
        VectorXd counts = VectorXd::Zero(params_.vocab_size());
        for (int64_t d = 0; d < shape_.lengths[un]; ++d) counts[rng.categorical(dist)] += 1.0;
        sample.counts.push_back(std::move(counts));
    }
    return sample;
}

}  // namespace ddtm
