#pragma once

#include <json.hpp>

#include "ddtm/ais.hpp"
#include "ddtm/inference.hpp"
#include "ddtm/oracle.hpp"
#include "ddtm/training.hpp"

namespace ddtm {

// --- perplexity ---------------------------------------------------------------

struct ThreadEval {
    std::string thread_id;
    int64_t words = 0;
    double elbo_e = 0.0;
    double ais_log_z = 0.0;
    double ais_se = 0.0;
    double log_p = 0.0;  // elbo_e - ais_log_z
    std::optional<double> exact_log_z;
    std::optional<double> ais_abs_error;
};

struct PerplexityResult {
    double nats_per_word = 0.0;
    double perplexity_exp = 0.0;  // exp(nats_per_word)
    double total_log_p = 0.0;
    int64_t total_words = 0;
    double mean_ais_se = 0.0;
    std::vector<ThreadEval> per_thread;
};

// Per-word negative log-likelihood in nats over a thread set. log p(x) of each
// thread is the posterior bound minus an AIS estimate of log Z; AIS runs once
// per distinct thread shape. with_oracle adds exact log Z (enumeration) where
// the budget allows.
PerplexityResult perplexity(const std::vector<const Thread*>& threads, const ModelParams& params,
                            const AISConfig& ais_cfg, const MFSchedule& sched,
                            bool with_oracle = false,
                            double oracle_log2_limit = kDefaultLog2Limit, int workers = 1);

// --- embeddings ---------------------------------------------------------------

enum class FeatureSource { comment_bits, thread_bits, concat };

FeatureSource default_feature_source(Variant v);
const char* feature_source_name(FeatureSource s);

struct EmbeddingSet {
    MatrixXd features;  // one row per comment
    std::vector<std::string> thread_ids;
    std::vector<std::string> comment_ids;
    std::vector<std::string> labels;  // subreddit
    VectorXd log_upvotes;             // sign(v) * log(1 + |v|)
    std::vector<int> deleted;         // has_deleted_child
};

EmbeddingSet extract_embeddings(const std::vector<const Thread*>& threads,
                                const ModelParams& params, const MFSchedule& sched,
                                FeatureSource source, int workers = 1);

// --- downstream predictors ------------------------------------------------------

struct RegressionModel {
    VectorXd weights;
    double intercept = 0.0;
    bool used_ridge = false;  // normal equations were singular
};

RegressionModel fit_ols(const MatrixXd& features, const VectorXd& targets);
VectorXd predict(const RegressionModel& model, const MatrixXd& features);
double mean_squared_error(const RegressionModel& model, const MatrixXd& features,
                          const VectorXd& targets);

struct ClassifierModel {
    VectorXd weights;
    double intercept = 0.0;
    bool degenerate = false;  // single-class training set
};

ClassifierModel fit_logistic(const MatrixXd& features, const std::vector<int>& labels,
                             const AdamConfig& adam = {.step_size = 0.05}, int max_iters = 2000,
                             double tol = 1e-7);
double accuracy(const ClassifierModel& model, const MatrixXd& features,
                const std::vector<int>& labels);

// --- retrieval -----------------------------------------------------------------

// Active-bit set of an embedding at threshold 0.5.
std::vector<int> active_bits(const VectorXd& embedding);

// Dice similarity 2|A∩B| / (|A|+|B|) over active-bit sets; an empty query has
// similarity 0 against nonempty sets and 1 against empty ones.
double dice_similarity(const std::vector<int>& a, const std::vector<int>& b);

struct RankedItem {
    int index;     // into the candidate set
    double score;  // Dice similarity
};

// Candidates sorted by descending score, ties broken by ascending candidate id.
std::vector<RankedItem> rank_by_dice(const VectorXd& query, const MatrixXd& candidates,
                                     const std::vector<std::string>& candidate_ids);

struct PRCurve {
    std::vector<double> recall;     // index k-1 = mean recall at cutoff k
    std::vector<double> precision;  // mean precision at cutoff k
};

PRCurve retrieval_pr(const EmbeddingSet& queries, const EmbeddingSet& candidates, int max_k);
double precision_at_k(const PRCurve& curve, int k);
// max precision over curve points with recall >= r (interpolated precision)
double interpolated_precision(const PRCurve& curve, double recall);

// --- report --------------------------------------------------------------------

struct EvalOptions {
    AISConfig ais;
    MFSchedule sched;
    bool with_oracle = false;
    double oracle_log2_limit = kDefaultLog2Limit;
    int workers = 1;
    int retrieval_max_k = 50;
};

// Full evaluation: test-set perplexity, upvote regression, deletion
// prediction, and same-subreddit retrieval (test queries against train
// candidates). Returns the report as JSON.
nlohmann::json evaluation_report(const Corpus& corpus, const ModelParams& params,
                                 const EvalOptions& opts);

void write_pr_curve_csv(const PRCurve& curve, const std::string& path);

}  // namespace ddtm
