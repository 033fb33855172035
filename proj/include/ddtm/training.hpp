#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ddtm/inference.hpp"
#include "ddtm/model.hpp"

namespace ddtm {

// Gradient of the approximate log-likelihood; one block per model parameter.
using GradEstimate = ParamBlocks;

// Expectations of the energy's sufficient statistics under some distribution
// over (x, h). The mean-field path fills these from factorized outer products;
// the exact-enumeration oracle fills them from true joint moments.
struct FeatureMoments {
    std::vector<MatrixXd> hx;   // per comment: F_c x K, E[h_n x_n']
    std::vector<MatrixXd> h0x;  // per comment: F_t x K, E[h0 x_n']
    std::vector<VectorXd> x;    // per comment: K, E[x_n]
    std::vector<MatrixXd> hh;   // per reply edge: F_c x F_c, E[h_parent h_child']
    MatrixXd h;                 // F_c x N, E[h_n]
    VectorXd h0;                // F_t, E[h0]
};

// Difference of feature expectations, posterior minus joint.
GradEstimate grad_from_moments(const Thread& t, const FeatureMoments& posterior,
                               const FeatureMoments& joint);

FeatureMoments moments_from_posterior(const Thread& t, const PosteriorMF& s, int vocab);
FeatureMoments moments_from_joint(const Thread& t, const JointMF& s);

// Production gradient path: closed-form block expressions over sparse counts.
//   dU = sum_n (psi_n x_n' - D_n phi_n gamma_n'),   da = sum_n (x_n - D_n gamma_n),
//   dW = sum_edges (psi_par psi_child' - phi_par phi_child'),  etc.
GradEstimate grad_estimate(const Thread& t, const ModelParams& p, const PosteriorMF& posterior,
                           const JointMF& joint);

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamBlocks m;  // first moments
    ParamBlocks v;  // second moments
    int64_t step = 0;
    AdamConfig cfg;

    static AdamState init(int vocab, int comment_bits, int thread_bits, const AdamConfig& cfg);
};

// One bias-corrected Adam ascent step. Masked blocks of the gradient are
// zeroed first so variant-disabled parameters stay exactly zero. Returns false
// (leaving state untouched) when the gradient is non-finite.
bool adam_step(ModelParams& params, AdamState& state, const GradEstimate& grad,
               const BlockMask& mask);

struct TrainConfig {
    int epochs = 10;
    uint64_t seed = 0;
    MFSchedule schedule;
    Variant variant = Variant::ddtm;
    AdamConfig adam;
    std::optional<double> grad_clip;  // global L2 norm
    int checkpoint_every = 0;         // epochs between callback checkpoints, 0 = final only
    bool early_stop = true;
    int patience = 3;
    int minibatch = 1;  // threads per accumulate-then-step update
    int workers = 1;

    void validate() const {
        DDTM_REQUIRE(epochs >= 0, "epochs must be nonnegative");
        DDTM_REQUIRE(minibatch >= 1 && workers >= 1, "minibatch and workers must be positive");
        schedule.validate();
    }
};

struct EpochDiagnostics {
    int epoch = 0;
    int64_t threads_seen = 0;
    double mean_approx_ll = 0.0;
    double heldout_approx_ll = std::numeric_limits<double>::quiet_NaN();
    double wallclock_s = 0.0;
    int64_t rejected_steps = 0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochDiagnostics> diagnostics;
    int best_epoch = 0;  // by held-out approximate log-likelihood when available
};

using EpochCallback =
    std::function<void(int epoch, const ModelParams& params, const EpochDiagnostics& diag)>;

// Stochastic maximum-likelihood training. Per thread: fit the posterior
// (warm-started from its previous visit), fit the joint warm-started from the
// posterior, take one Adam ascent step on the moment-difference gradient.
// Deterministic for a fixed seed and single worker.
TrainResult train(const std::vector<const Thread*>& train_threads,
                  const std::vector<const Thread*>& heldout_threads, const ModelParams& init,
                  const TrainConfig& cfg, const EpochCallback& callback = nullptr);

// Mean per-thread approximate log-likelihood over a set of threads.
double mean_approx_log_likelihood(const std::vector<const Thread*>& threads,
                                  const ModelParams& params, const MFSchedule& sched,
                                  int workers = 1);

}  // namespace ddtm
