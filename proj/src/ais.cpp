#include "ddtm/ais.hpp"

#include <cmath>

namespace ddtm {

std::vector<double> AISConfig::betas() const {
    if (!custom_betas.empty()) {
        DDTM_REQUIRE(custom_betas.size() >= 2 && custom_betas.front() == 0.0 &&
                         custom_betas.back() == 1.0,
                     "beta schedule must start at 0 and end at 1");
        for (size_t i = 1; i < custom_betas.size(); ++i) {
            DDTM_REQUIRE(custom_betas[i] > custom_betas[i - 1],
                         "beta schedule must be strictly increasing");
        }
        return custom_betas;
    }
    DDTM_REQUIRE(num_intermediate >= 1, "need at least one intermediate distribution");
    std::vector<double> betas(static_cast<size_t>(num_intermediate) + 1);
    if (path == AnnealPath::linear) {
        for (int i = 0; i <= num_intermediate; ++i) {
            betas[static_cast<size_t>(i)] =
                static_cast<double>(i) / static_cast<double>(num_intermediate);
        }
    } else {
        // geometric spacing from beta_1 = 1e-4 up to 1, beta_0 = 0
        const double beta_1 = 1e-4;
        betas[0] = 0.0;
        if (num_intermediate == 1) {
            betas[1] = 1.0;
        } else {
            double ratio = std::pow(1.0 / beta_1, 1.0 / static_cast<double>(num_intermediate - 1));
            double b = beta_1;
            for (int i = 1; i <= num_intermediate; ++i) {
                betas[static_cast<size_t>(i)] = std::min(1.0, b);
                b *= ratio;
            }
            betas[static_cast<size_t>(num_intermediate)] = 1.0;
        }
    }
    return betas;
}

AISResult ais_log_z(const ThreadShape& shape, const ModelParams& params, const AISConfig& cfg) {
    DDTM_REQUIRE(cfg.num_runs >= 1, "need at least one AIS run");
    const std::vector<double> betas = cfg.betas();
    const size_t steps = betas.size() - 1;

    AISResult result;
    result.base_log_z = GibbsSampler::base_log_z(shape, params);
    result.log_weights.resize(static_cast<size_t>(cfg.num_runs));

    for (int run = 0; run < cfg.num_runs; ++run) {
        Rng rng = Rng::derive(cfg.seed, 0xa15 + static_cast<uint64_t>(run));
        GibbsSampler sampler(shape, params);
        sampler.set_beta(0.0);
        sampler.init_from_base(rng);

        double logw = 0.0;
        for (size_t t = 1; t <= steps; ++t) {
            logw += (betas[t] - betas[t - 1]) * sampler.interaction_energy();
            if (t < steps) {
                sampler.set_beta(betas[t]);
                sampler.sweep(rng, cfg.gibbs_sweeps);
            }
        }
        result.log_weights[static_cast<size_t>(run)] = logw;
    }

    // log mean exp of the weights, plus delta-method standard error of log Z
    double max_w = -std::numeric_limits<double>::infinity();
    for (double w : result.log_weights) max_w = std::max(max_w, w);
    double mean = 0.0;
    for (double w : result.log_weights) mean += std::exp(w - max_w);
    mean /= static_cast<double>(cfg.num_runs);
    result.log_z = result.base_log_z + max_w + std::log(mean);

    if (cfg.num_runs > 1) {
        double var = 0.0;
        for (double w : result.log_weights) {
            double d = std::exp(w - max_w) - mean;
            var += d * d;
        }
        var /= static_cast<double>(cfg.num_runs - 1);
        result.standard_error =
            std::sqrt(var / static_cast<double>(cfg.num_runs)) / mean;
    } else {
        result.standard_error = std::numeric_limits<double>::infinity();
    }
    return result;
}

}  // namespace ddtm
