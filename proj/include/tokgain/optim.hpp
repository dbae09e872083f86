#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tokgain {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment state for one flat parameter vector.
class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return step_; }

    // One update: params -= lr * m_hat / (sqrt(v_hat) + eps), with
    // bias-corrected moments. Sizes are locked in by the first call.
    void step(std::span<double> params, std::span<const double> grads);

private:
    AdamConfig cfg_;
    std::uint64_t step_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

} // namespace tokgain
