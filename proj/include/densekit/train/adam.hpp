#pragma once

#include "densekit/nn/encoder.hpp"

namespace densekit::train {

struct AdamConfig {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.98;
  Scalar eps = 1e-6;
};

/// First/second-moment state, one slot per parameter tensor.
class AdamState {
 public:
  explicit AdamState(const nn::ParameterSet& params);
  long long step_count() const { return step_; }

  friend void adam_step(nn::ParameterSet& params, const nn::ParameterSet& grads,
                        AdamState& state, Scalar lr, const AdamConfig& cfg);

 private:
  nn::ParameterSet m_;
  nn::ParameterSet v_;
  long long step_ = 0;
};

/// In-place bias-corrected update: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(nn::ParameterSet& params, const nn::ParameterSet& grads,
               AdamState& state, Scalar lr, const AdamConfig& cfg = {});

}  // namespace densekit::train
