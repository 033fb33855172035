#pragma once

#include "ddtm/corpus.hpp"
#include "ddtm/model.hpp"
#include "ddtm/rng.hpp"
#include "ddtm/training.hpp"

namespace ddtm {

// Enumeration budget: K^(sum D_n) * 2^(N F_c + F_t) must stay within
// 2^log2_limit. Word sums are evaluated in closed form per hidden assignment,
// so the budget that actually drives runtime is the bit space.
constexpr double kDefaultLog2Limit = 20.0;

double enumeration_log2_cost(const ThreadShape& shape, int vocab, int comment_bits,
                             int thread_bits);

// Exact log Z by summing exp(energy) over every ordered word sequence and
// binary assignment. Throws NumericError when the budget is exceeded.
double exact_log_z(const ThreadShape& shape, const ModelParams& params,
                   double log2_limit = kDefaultLog2Limit);

// Exact marginal energy log sum_h exp(E(x, h)) of an observed thread.
double exact_marginal_energy(const Thread& t, const ModelParams& params,
                             double log2_limit = kDefaultLog2Limit);

// Exact log p(x) = marginal energy - log Z.
double exact_log_likelihood(const Thread& t, const ModelParams& params,
                            double log2_limit = kDefaultLog2Limit);

// Exact per-bit posterior means p(h_nf = 1 | x) and p(h0_f = 1 | x).
void exact_posterior_marginals(const Thread& t, const ModelParams& params, MatrixXd* comment_bits,
                               VectorXd* thread_bits, double log2_limit = kDefaultLog2Limit);

// True joint moments of the posterior p(h | x) and of the model p(x, h),
// in the layout grad_from_moments consumes.
FeatureMoments exact_posterior_moments(const Thread& t, const ModelParams& params,
                                       double log2_limit = kDefaultLog2Limit);
FeatureMoments exact_model_moments(const Thread& t, const ModelParams& params,
                                   double log2_limit = kDefaultLog2Limit);

// Exact sampler from the model joint: hidden bits by enumeration of their
// marginal (words integrated out analytically), then words conditionally iid.
class ExactThreadSampler {
public:
    ExactThreadSampler(const ThreadShape& shape, const ModelParams& params,
                       double log2_limit = kDefaultLog2Limit);

    // counts[n] is a dense K-vector of sampled word counts
    struct Sample {
        std::vector<VectorXd> counts;
        MatrixXd h;    // F_c x N, 0/1
        VectorXd h0;   // F_t, 0/1
    };
    Sample draw(Rng& rng) const;

    double log_z() const { return log_z_; }

private:
    ThreadShape shape_;
    const ModelParams& params_;
    std::vector<double> probs_;  // normalized over flat bit assignments
    double log_z_ = 0.0;
    int fc_;
    int ft_;
};

}  // namespace ddtm
