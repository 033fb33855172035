#pragma once

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace ddtm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Bad user input: malformed files, inconsistent shapes, unresolvable ids.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or numerically impossible requests.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

#define DDTM_REQUIRE(cond, msg)                    \
    do {                                           \
        if (!(cond)) throw ::ddtm::InputError(msg); \
    } while (0)

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

// Entropy of a Bernoulli with mean p; p is expected to be clamped away from {0,1}.
inline double bernoulli_entropy(double p) {
    return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

inline double log_sum_exp(const VectorXd& v) {
    if (v.size() == 0) return -std::numeric_limits<double>::infinity();
    double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

inline VectorXd softmax(const VectorXd& v) {
    VectorXd out = (v.array() - v.maxCoeff()).exp();
    out /= out.sum();
    return out;
}

// Entropy of a categorical distribution (zero mass terms contribute zero).
inline double categorical_entropy(const VectorXd& p) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) h -= p[k] * std::log(p[k]);
    }
    return h;
}

// Fork-join map over [0, n); results must be written to caller-index slots so
// the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace ddtm
