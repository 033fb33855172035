#pragma once

#include <optional>
#include <vector>

#include "ddtm/common.hpp"
#include "ddtm/corpus.hpp"
#include "ddtm/model.hpp"

namespace ddtm {

// Bernoulli means are clamped to this open interval to keep entropies finite.
constexpr double kProbClamp = 1e-7;

struct MFSchedule {
    int max_sweeps = 10;       // T
    double tolerance = 1e-4;   // max-abs parameter change
    bool init_phi_from_psi = true;

    void validate() const {
        DDTM_REQUIRE(max_sweeps >= 1, "schedule needs at least one sweep");
        DDTM_REQUIRE(tolerance > 0.0, "schedule tolerance must be positive");
    }
};

// Mean-field posterior approximation q(h | x): independent Bernoulli means for
// every comment bit and thread bit.
struct PosteriorMF {
    MatrixXd psi;   // F_c x N, column per comment
    VectorXd psi0;  // F_t
    double bound = 0.0;  // achieved lower bound on the marginal energy
    int sweeps = 0;
};

// Mean-field approximation of the joint over (x, h), used to bound log Z.
// gamma holds one word distribution per comment; all D_n words of a comment
// are modeled as draws from that single distribution.
struct JointMF {
    MatrixXd phi;    // F_c x N
    VectorXd phi0;   // F_t
    MatrixXd gamma;  // K x N, columns on the simplex
    double bound = 0.0;  // achieved lower bound on log Z
    int sweeps = 0;
};

// Single-coordinate updates. Each returns the max-abs change it caused;
// each is the exact coordinate-ascent maximizer of its bound.
double update_psi(const Thread& t, const ModelParams& p, PosteriorMF& s, int n);
double update_psi0(const Thread& t, const ModelParams& p, PosteriorMF& s);
double update_phi(const Thread& t, const ModelParams& p, JointMF& s, int n);
double update_phi0(const Thread& t, const ModelParams& p, JointMF& s);
double update_gamma(const Thread& t, const ModelParams& p, JointMF& s, int n);

// Bound evaluation from fitted states (closed form under the log-bilinear
// energy: E[h_n' W h_m] = psi_n' W psi_m, E[U x_n] under the joint
// approximation = D_n U gamma_n).
double elbo_posterior(const Thread& t, const ModelParams& p, const PosteriorMF& s);
double elbo_joint(const Thread& t, const ModelParams& p, const JointMF& s);

// Upward-downward coordinate ascent: one sweep updates childless comments
// first, then comments whose children are done, up to the root, then the same
// in reverse; the thread-level vector is refreshed once per sweep after the
// downward pass. Stops at max-abs change < tolerance or after max_sweeps.
PosteriorMF fit_posterior(const Thread& t, const ModelParams& p, const MFSchedule& sched,
                          const PosteriorMF* warm = nullptr);
JointMF fit_joint(const Thread& t, const ModelParams& p, const MFSchedule& sched,
                  const PosteriorMF* warm_psi = nullptr);

// Dense batched fits: comments of all still-active threads at the same tree
// depth are updated together with matrix products. Per-thread trajectories are
// identical to the single-thread fits; converged threads freeze.
std::vector<PosteriorMF> fit_posterior_batch(const std::vector<const Thread*>& threads,
                                             const ModelParams& p, const MFSchedule& sched,
                                             const std::vector<const PosteriorMF*>* warm = nullptr);
std::vector<JointMF> fit_joint_batch(const std::vector<const Thread*>& threads,
                                     const ModelParams& p, const MFSchedule& sched,
                                     const std::vector<const PosteriorMF*>* warm_psi = nullptr);

// Difference of the two bounds; an estimate of log p(x), not itself a bound.
double approx_log_likelihood(const Thread& t, const ModelParams& p, const MFSchedule& sched);

// Depth-ordered update schedule of a thread's comments.
struct TreeOrder {
    std::vector<int> depth;
    std::vector<std::vector<int>> levels;  // levels[d] = comments at depth d

    static TreeOrder of(const Thread& t);
};

}  // namespace ddtm
