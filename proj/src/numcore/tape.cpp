#include "adlraw/numcore/tape.hpp"

namespace adlraw::numcore {

template <typename T>
void BasicTape<T>::record(std::vector<std::uint64_t> inputs, std::uint64_t output,
                          std::function<void()> backward) {
    if (consumed_) throw ContractViolation("recording onto a consumed tape; clear() it first");
    for (std::uint64_t id : inputs) {
        if (id >= output) throw ContractViolation("tape entry input does not precede its output");
    }
    entries_.push_back(Entry{std::move(inputs), output, std::move(backward)});
}

template <typename T>
void BasicTape<T>::backward(BasicTensor<T>& loss) {
    if (consumed_) throw ContractViolation("backward() called twice on the same tape");
    if (entries_.empty()) throw ContractViolation("backward() on an empty tape");
    if (loss.numel() != 1) {
        throw ContractViolation("backward() needs a scalar loss, got " + shape_str(loss.shape()));
    }
    loss.zero_grad();
    loss.mutable_grad()[0] = T(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward();
    consumed_ = true;
    // Drop closures now so intermediate buffers are released.
    entries_.clear();
}

template <typename T>
void BasicTape<T>::clear() {
    entries_.clear();
    signature_.clear();
    consumed_ = false;
}

template class BasicTape<float>;
template class BasicTape<double>;

} // namespace adlraw::numcore
