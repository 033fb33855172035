#include "ddtm/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace ddtm {

using nlohmann::json;

PerplexityResult perplexity(const std::vector<const Thread*>& threads, const ModelParams& params,
                            const AISConfig& ais_cfg, const MFSchedule& sched, bool with_oracle,
                            double oracle_log2_limit, int workers) {
    PerplexityResult result;
    if (threads.empty()) return result;

    // one AIS estimate per distinct thread shape
    std::map<std::string, ThreadShape> shapes;
    for (const Thread* t : threads) {
        ThreadShape s = ThreadShape::of(*t);
        shapes.emplace(s.key(), std::move(s));
    }
    std::vector<const ThreadShape*> shape_list;
    std::vector<std::string> shape_keys;
    for (auto& [key, shape] : shapes) {
        shape_keys.push_back(key);
        shape_list.push_back(&shape);
    }
    std::vector<AISResult> ais(shape_list.size());
    parallel_for(static_cast<int>(shape_list.size()), workers, [&](int i) {
        AISConfig cfg = ais_cfg;
        // decorrelate runs across shapes while keeping the whole pass seeded
        cfg.seed = ais_cfg.seed + 7919 * static_cast<uint64_t>(i);
        ais[static_cast<size_t>(i)] = ais_log_z(*shape_list[static_cast<size_t>(i)], params, cfg);
    });
    std::map<std::string, const AISResult*> ais_by_key;
    for (size_t i = 0; i < shape_list.size(); ++i) {
        ais_by_key[shape_keys[i]] = &ais[i];
    }

    std::vector<ThreadEval> evals(threads.size());
    parallel_for(static_cast<int>(threads.size()), workers, [&](int i) {
        const Thread& t = *threads[static_cast<size_t>(i)];
        ThreadEval& e = evals[static_cast<size_t>(i)];
        e.thread_id = t.id;
        e.words = t.total_words();
        e.elbo_e = fit_posterior(t, params, sched).bound;
        ThreadShape shape = ThreadShape::of(t);
        const AISResult& a = *ais_by_key.at(shape.key());
        e.ais_log_z = a.log_z;
        e.ais_se = a.standard_error;
        e.log_p = e.elbo_e - e.ais_log_z;
        if (with_oracle) {
            double cost = enumeration_log2_cost(shape, params.vocab_size(),
                                                params.cfg.comment_bits, params.cfg.thread_bits);
            if (cost <= oracle_log2_limit) {
                e.exact_log_z = exact_log_z(shape, params, oracle_log2_limit);
                e.ais_abs_error = std::abs(e.ais_log_z - *e.exact_log_z);
            }
        }
    });

    double se_sum = 0.0;
    for (auto& e : evals) {
        result.total_log_p += e.log_p;
        result.total_words += e.words;
        se_sum += e.ais_se;
    }
    result.mean_ais_se = se_sum / static_cast<double>(evals.size());
    result.per_thread = std::move(evals);
    DDTM_REQUIRE(result.total_words > 0, "perplexity needs at least one word");
    result.nats_per_word = -result.total_log_p / static_cast<double>(result.total_words);
    result.perplexity_exp = std::exp(result.nats_per_word);
    return result;
}

FeatureSource default_feature_source(Variant v) {
    switch (v) {
        case Variant::ddtm:
        case Variant::ddtm_nocpl:
            return FeatureSource::concat;
        case Variant::rs_thread:
            return FeatureSource::thread_bits;
        case Variant::rs_comment:
        case Variant::unigram:
            return FeatureSource::comment_bits;
    }
    return FeatureSource::concat;
}

const char* feature_source_name(FeatureSource s) {
    switch (s) {
        case FeatureSource::comment_bits: return "comment_bits";
        case FeatureSource::thread_bits: return "thread_bits";
        case FeatureSource::concat: return "concat";
    }
    return "unknown";
}

EmbeddingSet extract_embeddings(const std::vector<const Thread*>& threads,
                                const ModelParams& params, const MFSchedule& sched,
                                FeatureSource source, int workers) {
    const int fc = params.cfg.comment_bits;
    const int ft = params.cfg.thread_bits;
    int dim = 0;
    switch (source) {
        case FeatureSource::comment_bits: dim = fc; break;
        case FeatureSource::thread_bits: dim = ft; break;
        case FeatureSource::concat: dim = fc + ft; break;
    }

    std::vector<PosteriorMF> states(threads.size());
    parallel_for(static_cast<int>(threads.size()), workers, [&](int i) {
        states[static_cast<size_t>(i)] =
            fit_posterior(*threads[static_cast<size_t>(i)], params, sched);
    });

    int64_t rows = 0;
    for (const Thread* t : threads) rows += t->size();

    EmbeddingSet out;
    out.features.resize(rows, dim);
    out.log_upvotes.resize(rows);
    out.thread_ids.reserve(static_cast<size_t>(rows));
    out.comment_ids.reserve(static_cast<size_t>(rows));
    out.labels.reserve(static_cast<size_t>(rows));
    out.deleted.reserve(static_cast<size_t>(rows));

    int64_t row = 0;
    for (size_t i = 0; i < threads.size(); ++i) {
        const Thread& t = *threads[i];
        const PosteriorMF& s = states[i];
        for (int n = 0; n < t.size(); ++n) {
            const CommentBag& bag = t.comments[static_cast<size_t>(n)];
            switch (source) {
                case FeatureSource::comment_bits:
                    out.features.row(row) = s.psi.col(n).transpose();
                    break;
                case FeatureSource::thread_bits:
                    out.features.row(row) = s.psi0.transpose();
                    break;
                case FeatureSource::concat:
                    out.features.row(row).head(fc) = s.psi.col(n).transpose();
                    out.features.row(row).tail(ft) = s.psi0.transpose();
                    break;
            }
            double v = static_cast<double>(bag.upvotes);
            out.log_upvotes[row] = (v < 0.0 ? -1.0 : 1.0) * std::log1p(std::abs(v));
            out.thread_ids.push_back(t.id);
            out.comment_ids.push_back(bag.id);
            out.labels.push_back(t.subreddit);
            out.deleted.push_back(bag.has_deleted_child ? 1 : 0);
            ++row;
        }
    }
    return out;
}

// --- downstream predictors ------------------------------------------------------

RegressionModel fit_ols(const MatrixXd& features, const VectorXd& targets) {
    DDTM_REQUIRE(features.rows() == targets.size() && features.rows() > 0,
                 "regression needs matching nonempty features/targets");
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    MatrixXd X(n, d + 1);
    X.leftCols(d) = features;
    X.col(d).setOnes();

    MatrixXd gram = X.transpose() * X;
    VectorXd rhs = X.transpose() * targets;

    RegressionModel model;
    Eigen::FullPivLU<MatrixXd> lu(gram);
    VectorXd solution;
    if (lu.isInvertible()) {
        solution = lu.solve(rhs);
    } else {
        model.used_ridge = true;
        MatrixXd ridged = gram + 1e-6 * MatrixXd::Identity(d + 1, d + 1);
        solution = ridged.ldlt().solve(rhs);
    }
    model.weights = solution.head(d);
    model.intercept = solution[d];
    return model;
}

VectorXd predict(const RegressionModel& model, const MatrixXd& features) {
    return (features * model.weights).array() + model.intercept;
}

double mean_squared_error(const RegressionModel& model, const MatrixXd& features,
                          const VectorXd& targets) {
    VectorXd err = predict(model, features) - targets;
    return err.squaredNorm() / static_cast<double>(err.size());
}

ClassifierModel fit_logistic(const MatrixXd& features, const std::vector<int>& labels,
                             const AdamConfig& adam, int max_iters, double tol) {
    DDTM_REQUIRE(features.rows() == static_cast<Eigen::Index>(labels.size()) && !labels.empty(),
                 "classifier needs matching nonempty features/labels");
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();

    int64_t positives = 0;
    for (int y : labels) positives += y;
    ClassifierModel model;
    model.weights = VectorXd::Zero(d);
    if (positives == 0 || positives == n) {
        // single-class training set; fall back to a constant classifier
        model.degenerate = true;
        double rate = std::min(1.0 - 1e-6, std::max(1e-6, static_cast<double>(positives) /
                                                              static_cast<double>(n)));
        model.intercept = std::log(rate / (1.0 - rate));
        return model;
    }

    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = static_cast<double>(labels[static_cast<size_t>(i)]);

    // full-batch Adam ascent on the log-likelihood, intercept as extra weight
    VectorXd w = VectorXd::Zero(d + 1);
    VectorXd m = VectorXd::Zero(d + 1);
    VectorXd v = VectorXd::Zero(d + 1);
    for (int step = 1; step <= max_iters; ++step) {
        VectorXd z = features * w.head(d);
        z.array() += w[d];
        VectorXd p(n);
        for (Eigen::Index i = 0; i < n; ++i) p[i] = sigmoid(z[i]);
        VectorXd residual = y - p;
        VectorXd grad(d + 1);
        grad.head(d) = features.transpose() * residual / static_cast<double>(n);
        grad[d] = residual.sum() / static_cast<double>(n);

        m = adam.beta1 * m + (1.0 - adam.beta1) * grad;
        v = adam.beta2 * v + (1.0 - adam.beta2) * grad.cwiseProduct(grad);
        double corr1 = 1.0 - std::pow(adam.beta1, step);
        double corr2 = 1.0 - std::pow(adam.beta2, step);
        VectorXd delta =
            adam.step_size * (m / corr1).array() / ((v / corr2).array().sqrt() + adam.eps);
        w += delta;
        if (grad.lpNorm<Eigen::Infinity>() < tol) break;
    }
    model.weights = w.head(d);
    model.intercept = w[d];
    return model;
}

double accuracy(const ClassifierModel& model, const MatrixXd& features,
                const std::vector<int>& labels) {
    DDTM_REQUIRE(features.rows() == static_cast<Eigen::Index>(labels.size()) && !labels.empty(),
                 "accuracy needs matching nonempty features/labels");
    int64_t correct = 0;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        double z = features.row(i).dot(model.weights) + model.intercept;
        int pred = sigmoid(z) > 0.5 ? 1 : 0;
        if (pred == labels[static_cast<size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(features.rows());
}

// --- retrieval -----------------------------------------------------------------

std::vector<int> active_bits(const VectorXd& embedding) {
    std::vector<int> active;
    for (Eigen::Index f = 0; f < embedding.size(); ++f) {
        if (embedding[f] > 0.5) active.push_back(static_cast<int>(f));
    }
    return active;
}

double dice_similarity(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    size_t i = 0, j = 0, common = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++common;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

std::vector<RankedItem> rank_by_dice(const VectorXd& query, const MatrixXd& candidates,
                                     const std::vector<std::string>& candidate_ids) {
    DDTM_REQUIRE(candidates.rows() == static_cast<Eigen::Index>(candidate_ids.size()),
                 "candidate ids do not match candidate rows");
    std::vector<int> q = active_bits(query);
    std::vector<RankedItem> ranked(static_cast<size_t>(candidates.rows()));
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
        VectorXd row = candidates.row(i).transpose();
        ranked[static_cast<size_t>(i)] = {static_cast<int>(i),
                                          dice_similarity(q, active_bits(row))};
    }
    std::sort(ranked.begin(), ranked.end(), [&](const RankedItem& x, const RankedItem& y) {
        if (x.score != y.score) return x.score > y.score;
        return candidate_ids[static_cast<size_t>(x.index)] <
               candidate_ids[static_cast<size_t>(y.index)];
    });
    return ranked;
}

PRCurve retrieval_pr(const EmbeddingSet& queries, const EmbeddingSet& candidates, int max_k) {
    const int n_queries = static_cast<int>(queries.features.rows());
    const int n_candidates = static_cast<int>(candidates.features.rows());
    DDTM_REQUIRE(n_queries > 0 && n_candidates > 0, "retrieval needs queries and candidates");
    max_k = std::min(max_k, n_candidates);

    // candidate ids must be unique for deterministic tie-breaks
    std::vector<std::string> cand_ids(static_cast<size_t>(n_candidates));
    for (int i = 0; i < n_candidates; ++i) {
        cand_ids[static_cast<size_t>(i)] =
            candidates.thread_ids[static_cast<size_t>(i)] + "/" +
            candidates.comment_ids[static_cast<size_t>(i)];
    }

    PRCurve curve;
    curve.recall.assign(static_cast<size_t>(max_k), 0.0);
    curve.precision.assign(static_cast<size_t>(max_k), 0.0);
    int used_queries = 0;
    for (int qi = 0; qi < n_queries; ++qi) {
        const std::string& label = queries.labels[static_cast<size_t>(qi)];
        int64_t relevant_total = 0;
        for (int ci = 0; ci < n_candidates; ++ci) {
            if (candidates.labels[static_cast<size_t>(ci)] == label) ++relevant_total;
        }
        if (relevant_total == 0) continue;
        ++used_queries;
        auto ranked = rank_by_dice(queries.features.row(qi).transpose(), candidates.features,
                                   cand_ids);
        int64_t hits = 0;
        for (int k = 1; k <= max_k; ++k) {
            if (candidates.labels[static_cast<size_t>(ranked[static_cast<size_t>(k - 1)].index)] ==
                label) {
                ++hits;
            }
            curve.precision[static_cast<size_t>(k - 1)] +=
                static_cast<double>(hits) / static_cast<double>(k);
            curve.recall[static_cast<size_t>(k - 1)] +=
                static_cast<double>(hits) / static_cast<double>(relevant_total);
        }
    }
    DDTM_REQUIRE(used_queries > 0, "no query has a relevant candidate");
    for (int k = 0; k < max_k; ++k) {
        curve.precision[static_cast<size_t>(k)] /= used_queries;
        curve.recall[static_cast<size_t>(k)] /= used_queries;
    }
    return curve;
}

double precision_at_k(const PRCurve& curve, int k) {
    DDTM_REQUIRE(k >= 1 && k <= static_cast<int>(curve.precision.size()), "k out of range");
    return curve.precision[static_cast<size_t>(k - 1)];
}

double interpolated_precision(const PRCurve& curve, double recall) {
    double best = 0.0;
    for (size_t i = 0; i < curve.recall.size(); ++i) {
        if (curve.recall[i] >= recall) best = std::max(best, curve.precision[i]);
    }
    return best;
}

// --- report --------------------------------------------------------------------

nlohmann::json evaluation_report(const Corpus& corpus, const ModelParams& params,
                                 const EvalOptions& opts) {
    std::vector<const Thread*> train = corpus.train_threads();
    std::vector<const Thread*> test = corpus.test_threads();
    DDTM_REQUIRE(!test.empty(), "evaluation needs a nonempty test split");

    json report;
    report["variant"] = variant_name(params.cfg.variant);
    report["comment_bits"] = params.cfg.comment_bits;
    report["thread_bits"] = params.cfg.thread_bits;
    report["test_threads"] = test.size();

    PerplexityResult perp = perplexity(test, params, opts.ais, opts.sched, opts.with_oracle,
                                       opts.oracle_log2_limit, opts.workers);
    report["perplexity_nats"] = perp.nats_per_word;
    report["perplexity_exp"] = perp.perplexity_exp;
    report["ais"] = {{"num_intermediate", opts.ais.num_intermediate},
                     {"num_runs", opts.ais.num_runs},
                     {"se", perp.mean_ais_se}};
    if (opts.with_oracle) {
        json oracle = json::array();
        for (const auto& e : perp.per_thread) {
            if (e.exact_log_z) {
                oracle.push_back({{"thread", e.thread_id},
                                  {"ais_log_z", e.ais_log_z},
                                  {"exact_log_z", *e.exact_log_z},
                                  {"abs_error", *e.ais_abs_error},
                                  {"se", e.ais_se}});
            }
        }
        report["oracle"] = std::move(oracle);
    }

    if (!train.empty()) {
        FeatureSource source = default_feature_source(params.cfg.variant);
        EmbeddingSet train_emb = extract_embeddings(train, params, opts.sched, source, opts.workers);
        EmbeddingSet test_emb = extract_embeddings(test, params, opts.sched, source, opts.workers);
        report["feature_source"] = feature_source_name(source);

        if (train_emb.features.cols() > 0) {
            RegressionModel reg = fit_ols(train_emb.features, train_emb.log_upvotes);
            report["upvote_mse"] = mean_squared_error(reg, test_emb.features, test_emb.log_upvotes);
            report["upvote_used_ridge"] = reg.used_ridge;

            ClassifierModel cls = fit_logistic(train_emb.features, train_emb.deleted);
            report["deletion_accuracy"] = accuracy(cls, test_emb.features, test_emb.deleted);
            report["deletion_degenerate"] = cls.degenerate;

            PRCurve curve = retrieval_pr(test_emb, train_emb, opts.retrieval_max_k);
            json pr = json::array();
            for (size_t k = 0; k < curve.recall.size(); ++k) {
                pr.push_back({curve.recall[k], curve.precision[k]});
            }
            report["pr_curve"] = std::move(pr);
        }
    }
    return report;
}

void write_pr_curve_csv(const PRCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    DDTM_REQUIRE(out.good(), "cannot write PR curve: " + path);
    out << "k,recall,precision\n";
    for (size_t i = 0; i < curve.recall.size(); ++i) {
        out << (i + 1) << ',' << curve.recall[i] << ',' << curve.precision[i] << '\n';
    }
}

}  // namespace ddtm
