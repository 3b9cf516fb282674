#include "adlraw/numcore/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adlraw::numcore {

template <typename T>
BasicOptimizer<T>::BasicOptimizer(std::vector<BasicTensor<T>> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
    if (config_.lr <= 0.0) throw ContractViolation("optimizer learning rate must be positive");
    if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
        throw ContractViolation("optimizer betas must lie in [0, 1)");
    }
    for (const auto& p : params_) {
        state_.first_moment.emplace_back(p.numel(), T(0));
        state_.second_moment.emplace_back(p.numel(), T(0));
    }
}

template <typename T>
void BasicOptimizer<T>::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

template <typename T>
void BasicOptimizer<T>::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].has_grad()) {
            throw ContractViolation("optimizer step: parameter " + std::to_string(i) + " " +
                                    shape_str(params_[i].shape()) + " has no gradient");
        }
    }
    const std::int64_t t = state_.step + 1;
    const T lr = static_cast<T>(config_.lr);
    if (config_.rule == UpdateRule::sgd) {
        for (auto& p : params_) {
            auto w = p.mutable_data();
            const auto g = p.grad();
            for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
        }
        state_.step = t;
        return;
    }
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T eps = static_cast<T>(config_.eps);
    const T decay = static_cast<T>(1.0 - config_.lr * config_.weight_decay);
    const T bc1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(t)));
    const T bc2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(t)));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto w = params_[i].mutable_data();
        const auto g = params_[i].grad();
        auto& m = state_.first_moment[i];
        auto& v = state_.second_moment[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = b1 * m[j] + (T(1) - b1) * g[j];
            v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
            const T m_hat = m[j] / bc1;
            const T v_hat = v[j] / bc2;
            w[j] = w[j] * decay - lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
    state_.step = t;
}

template <typename T>
void BasicOptimizer<T>::set_state(OptimizerState<T> state) {
    if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size()) {
        throw ContractViolation("optimizer state does not match parameter count");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (state.first_moment[i].size() != params_[i].numel() ||
            state.second_moment[i].size() != params_[i].numel()) {
            throw ContractViolation("optimizer moment buffer " + std::to_string(i) +
                                    " does not match its parameter");
        }
    }
    if (state.step < 0) throw ContractViolation("optimizer step counter must be >= 0");
    state_ = std::move(state);
}

template <typename T>
ParamSnapshot<T> snapshot_params(const BasicOptimizer<T>& optimizer) {
    ParamSnapshot<T> snap;
    for (const auto& p : optimizer.params()) {
        snap.shapes.push_back(p.shape());
        snap.values.emplace_back(p.data().begin(), p.data().end());
    }
    snap.optimizer = optimizer.state();
    return snap;
}

template <typename T>
void restore_params(BasicOptimizer<T>& optimizer, const ParamSnapshot<T>& snapshot) {
    auto& params = optimizer.params();
    if (snapshot.shapes.size() != params.size()) {
        throw ContractViolation("restore_params: snapshot has " + std::to_string(snapshot.shapes.size()) +
                                " parameters, model has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (snapshot.shapes[i] != params[i].shape()) {
            throw ContractViolation("restore_params: parameter " + std::to_string(i) + " shape " +
                                    shape_str(params[i].shape()) + " vs snapshot " +
                                    shape_str(snapshot.shapes[i]));
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto dst = params[i].mutable_data();
        std::copy(snapshot.values[i].begin(), snapshot.values[i].end(), dst.begin());
    }
    optimizer.set_state(snapshot.optimizer);
}

std::uint64_t fnv1a(const void* bytes, std::size_t length, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < length; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename T>
std::uint64_t state_digest(const BasicOptimizer<T>& optimizer) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : optimizer.params()) h = fnv1a(p.data().data(), p.numel() * sizeof(T), h);
    const auto& st = optimizer.state();
    for (const auto& m : st.first_moment) h = fnv1a(m.data(), m.size() * sizeof(T), h);
    for (const auto& v : st.second_moment) h = fnv1a(v.data(), v.size() * sizeof(T), h);
    return fnv1a(&st.step, sizeof(st.step), h);
}

template class BasicOptimizer<float>;
template class BasicOptimizer<double>;
template ParamSnapshot<float> snapshot_params(const BasicOptimizer<float>&);
template ParamSnapshot<double> snapshot_params(const BasicOptimizer<double>&);
template void restore_params(BasicOptimizer<float>&, const ParamSnapshot<float>&);
template void restore_params(BasicOptimizer<double>&, const ParamSnapshot<double>&);
template std::uint64_t state_digest(const BasicOptimizer<float>&);
template std::uint64_t state_digest(const BasicOptimizer<double>&);

} // namespace adlraw::numcore
