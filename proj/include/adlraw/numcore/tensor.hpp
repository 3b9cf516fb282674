#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adlraw {

/// Raised when a caller breaks a documented precondition (shape mismatch,
/// out-of-range argument, misuse of a tape).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised when an operation produces NaN or Inf.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adlraw

namespace adlraw::numcore {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // empty when no gradient has been allocated
    bool requires_grad = false;
    std::uint64_t node_id = 0;
};

std::uint64_t next_node_id();

/// Dense row-major tensor handle. Copies share storage; use clone() for a
/// detached deep copy.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    BasicTensor(Shape shape, std::vector<T> data);

    static BasicTensor zeros(Shape shape);
    static BasicTensor full(Shape shape, T value);
    static BasicTensor scalar(T value);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const { return impl().data.size(); }

    std::span<const T> data() const { return impl().data; }
    std::span<T> mutable_data() { return impl().data; }
    T item() const;
    T at(std::size_t flat) const { return impl().data.at(flat); }

    bool has_grad() const { return defined() && !impl_->grad.empty(); }
    std::span<const T> grad() const { return impl().grad; }
    std::span<T> mutable_grad() { return impl().grad; }
    /// Allocates a zero gradient buffer if none exists.
    void ensure_grad();
    void zero_grad();
    void clear_grad();

    bool requires_grad() const { return defined() && impl_->requires_grad; }
    BasicTensor& set_requires_grad(bool on);

    std::uint64_t node_id() const { return impl().node_id; }

    BasicTensor clone() const;
    template <typename U>
    BasicTensor<U> cast() const;

    TensorImpl<T>& impl();
    const TensorImpl<T>& impl() const;
    const std::shared_ptr<TensorImpl<T>>& handle() const { return impl_; }

private:
    std::shared_ptr<TensorImpl<T>> impl_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename T>
template <typename U>
BasicTensor<U> BasicTensor<T>::cast() const {
    std::vector<U> out(numel());
    const auto src = data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>(src[i]);
    BasicTensor<U> result(shape(), std::move(out));
    result.set_requires_grad(requires_grad());
    return result;
}

} // namespace adlraw::numcore
