#pragma once

#include <cstddef>
#include <vector>

namespace adlraw::adl {

/// Bounded multiset of validation PSNR values kept in ascending order. When
/// full, admitting a value first drops the smallest one.
class EvalQueue {
public:
    explicit EvalQueue(std::size_t capacity);

    void admit(double value);
    /// Sum of the values in ascending order divided by the count. Throws
    /// ContractViolation on an empty queue.
    double mean() const;

    std::size_t size() const { return values_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return values_.empty(); }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t capacity_;
    std::vector<double> values_;
};

} // namespace adlraw::adl
