#include "adlraw/numcore/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace adlraw::numcore {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data) {
    if (shape.empty()) throw ContractViolation("tensor shape must have at least one dimension");
    for (std::size_t d : shape) {
        if (d == 0) throw ContractViolation("tensor dimensions must be positive: " + shape_str(shape));
    }
    if (shape_numel(shape) != data.size()) {
        throw ContractViolation("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
    }
    for (const T& v : data) {
        if (!std::isfinite(v)) throw NonFiniteError("tensor constructed with non-finite value");
    }
    impl_ = std::make_shared<TensorImpl<T>>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->node_id = next_node_id();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape) {
    const std::size_t n = shape_numel(shape);
    return BasicTensor(std::move(shape), std::vector<T>(n, T(0)));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value) {
    const std::size_t n = shape_numel(shape);
    return BasicTensor(std::move(shape), std::vector<T>(n, value));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value) {
    return BasicTensor(Shape{1}, std::vector<T>{value});
}

template <typename T>
TensorImpl<T>& BasicTensor<T>::impl() {
    if (!impl_) throw ContractViolation("use of undefined tensor");
    return *impl_;
}

template <typename T>
const TensorImpl<T>& BasicTensor<T>::impl() const {
    if (!impl_) throw ContractViolation("use of undefined tensor");
    return *impl_;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
    return impl().shape;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw ContractViolation("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    return s[axis];
}

template <typename T>
T BasicTensor<T>::item() const {
    if (numel() != 1) throw ContractViolation("item() on non-scalar tensor " + shape_str(shape()));
    return impl().data[0];
}

template <typename T>
void BasicTensor<T>::ensure_grad() {
    auto& im = impl();
    if (im.grad.empty()) im.grad.assign(im.data.size(), T(0));
}

template <typename T>
void BasicTensor<T>::zero_grad() {
    auto& im = impl();
    im.grad.assign(im.data.size(), T(0));
}

template <typename T>
void BasicTensor<T>::clear_grad() {
    auto& im = impl();
    im.grad.clear();
    im.grad.shrink_to_fit();
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::set_requires_grad(bool on) {
    impl().requires_grad = on;
    return *this;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
    BasicTensor out(shape(), std::vector<T>(data().begin(), data().end()));
    out.set_requires_grad(requires_grad());
    return out;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

} // namespace adlraw::numcore
