#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "netimplode/errors.hpp"
#include "netimplode/matrix.hpp"

namespace netimplode {

// A named, mutable view of one parameter tensor. `decay` selects whether
// weight decay applies to it.
struct ParamRef {
  std::string name;
  Matrix2D* value = nullptr;
  bool decay = true;
};

struct OptimizerState {
  std::vector<Matrix2D> velocity;  // one per parameter, same shape
  double momentum = 0.9;
  double learning_rate = 0.1;
  double weight_decay = 0.0;
};

inline OptimizerState make_optimizer(std::span<const ParamRef> params, double learning_rate,
                                     double momentum, double weight_decay) {
  if (!(learning_rate > 0.0)) throw DomainError("optimizer: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("optimizer: momentum outside [0, 1)");
  if (!(weight_decay >= 0.0)) throw DomainError("optimizer: negative weight decay");
  OptimizerState state{{}, momentum, learning_rate, weight_decay};
  state.velocity.reserve(params.size());
  for (const auto& p : params) state.velocity.emplace_back(p.value->rows(), p.value->cols());
  return state;
}

// Heavy-ball SGD with decay folded into the gradient:
//   v <- mu * v + (g + lambda * theta);  theta <- theta - eta * v
inline void sgd_momentum_step(std::span<const ParamRef> params, std::span<const Matrix2D> grads,
                              OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.velocity.size()) {
    throw ShapeError("sgd_momentum_step: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.velocity.size()) + " velocities");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    detail::require_same_shape(*params[i].value, grads[i], params[i].name.c_str());
    detail::require_same_shape(*params[i].value, state.velocity[i], params[i].name.c_str());
  }
  const double mu = state.momentum;
  const double eta = state.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double lambda = params[i].decay ? state.weight_decay : 0.0;
    auto theta = params[i].value->values();
    auto g = grads[i].values();
    auto v = state.velocity[i].values();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = mu * v[j] + (g[j] + lambda * theta[j]);
      theta[j] -= eta * v[j];
    }
  }
}

}  // namespace netimplode
