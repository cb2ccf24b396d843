#include "densekit/train/adam.hpp"

#include <cmath>

namespace densekit::train {

AdamState::AdamState(const nn::ParameterSet& params) {
  for (const auto& name : params.names()) {
    const Matrix& p = params.at(name);
    m_.add(name, Matrix::Zero(p.rows(), p.cols()));
    v_.add(name, Matrix::Zero(p.rows(), p.cols()));
  }
}

void adam_step(nn::ParameterSet& params, const nn::ParameterSet& grads,
               AdamState& state, Scalar lr, const AdamConfig& cfg) {
  require(params.same_shapes(grads), "adam_step: gradient shapes do not match");
  require(params.same_shapes(state.m_), "adam_step: state shapes do not match");
  require(cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1,
          "adam_step: betas must lie in [0,1)");
  ++state.step_;
  const Scalar c1 = Scalar(1) - std::pow(cfg.beta1, static_cast<Scalar>(state.step_));
  const Scalar c2 = Scalar(1) - std::pow(cfg.beta2, static_cast<Scalar>(state.step_));
  for (const auto& name : params.names()) {
    Matrix& p = params.at(name);
    const Matrix& g = grads.at(name);
    Matrix& m = state.m_.at(name);
    Matrix& v = state.v_.at(name);
    m = cfg.beta1 * m + (Scalar(1) - cfg.beta1) * g;
    v = cfg.beta2 * v.array().matrix() +
        (Scalar(1) - cfg.beta2) * g.array().square().matrix();
    const Matrix m_hat = m / c1;
    const Matrix v_hat = v / c2;
    p.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
  }
}

}  // namespace densekit::train
