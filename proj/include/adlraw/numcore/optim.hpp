#pragma once

#include "adlraw/numcore/tensor.hpp"

#include <cstdint>
#include <vector>

namespace adlraw::numcore {

enum class UpdateRule { adamw, sgd };

struct OptimizerConfig {
    UpdateRule rule = UpdateRule::adamw;
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

template <typename T>
struct OptimizerState {
    std::vector<std::vector<T>> first_moment;
    std::vector<std::vector<T>> second_moment;
    std::int64_t step = 0;
};

/// AdamW with decoupled weight decay, or plain gradient descent when
/// configured with UpdateRule::sgd. Holds handles to the parameters it updates.
template <typename T>
class BasicOptimizer {
public:
    BasicOptimizer(std::vector<BasicTensor<T>> params, OptimizerConfig config = {});

    /// Applies one update from the gradients currently stored on the
    /// parameters. Throws ContractViolation if any gradient is missing.
    void step();
    void zero_grad();

    const OptimizerConfig& config() const { return config_; }
    OptimizerConfig& config() { return config_; }
    const OptimizerState<T>& state() const { return state_; }
    void set_state(OptimizerState<T> state);
    std::int64_t step_count() const { return state_.step; }
    std::vector<BasicTensor<T>>& params() { return params_; }
    const std::vector<BasicTensor<T>>& params() const { return params_; }

private:
    std::vector<BasicTensor<T>> params_;
    OptimizerConfig config_;
    OptimizerState<T> state_;
};

using Optimizer = BasicOptimizer<float>;

/// Copy of parameter values and optimizer state, used to revert a step.
template <typename T>
struct ParamSnapshot {
    std::vector<Shape> shapes;
    std::vector<std::vector<T>> values;
    OptimizerState<T> optimizer;
};

template <typename T>
ParamSnapshot<T> snapshot_params(const BasicOptimizer<T>& optimizer);

/// Writes the snapshot back into the optimizer's parameters and state.
/// Throws ContractViolation when the parameter layout differs.
template <typename T>
void restore_params(BasicOptimizer<T>& optimizer, const ParamSnapshot<T>& snapshot);

/// FNV-1a digest over the raw bytes of every parameter and the optimizer
/// moments and step counter.
template <typename T>
std::uint64_t state_digest(const BasicOptimizer<T>& optimizer);

std::uint64_t fnv1a(const void* bytes, std::size_t length, std::uint64_t seed = 0xcbf29ce484222325ull);

} // namespace adlraw::numcore
