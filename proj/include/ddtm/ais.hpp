#pragma once

#include <vector>

#include "ddtm/gibbs.hpp"

namespace ddtm {

enum class AnnealPath { linear, geometric };

struct AISConfig {
    int num_intermediate = 2000;  // transitions between beta = 0 and beta = 1
    int num_runs = 20;
    AnnealPath path = AnnealPath::linear;
    int gibbs_sweeps = 1;  // sweeps per temperature
    uint64_t seed = 0;
    std::vector<double> custom_betas;  // optional explicit schedule

    std::vector<double> betas() const;
};

struct AISResult {
    std::vector<double> log_weights;  // one per run
    double base_log_z = 0.0;
    double log_z = 0.0;          // base_log_z + log mean exp(log_weights)
    double standard_error = 0.0; // of log_z across runs, delta method
};

// Annealed importance sampling estimate of log Z. The base distribution is the
// model with interactions zeroed (closed-form normalizer, exact independent
// samples); intermediate distributions scale the interaction energy by beta_t
// and are bridged with block Gibbs transitions on the joint (x, h).
AISResult ais_log_z(const ThreadShape& shape, const ModelParams& params, const AISConfig& cfg);

}  // namespace ddtm
