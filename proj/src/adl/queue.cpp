#include "adlraw/adl/queue.hpp"

#include "adlraw/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adlraw::adl {

EvalQueue::EvalQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ContractViolation("EvalQueue capacity must be at least 1");
    values_.reserve(capacity);
}

void EvalQueue::admit(double value) {
    if (!std::isfinite(value)) throw ContractViolation("EvalQueue: cannot admit non-finite value");
    if (values_.size() == capacity_) values_.erase(values_.begin());
    values_.insert(std::upper_bound(values_.begin(), values_.end(), value), value);
}

double EvalQueue::mean() const {
    if (values_.empty()) throw ContractViolation("EvalQueue: mean of an empty queue");
    double acc = 0.0;
    for (double v : values_) acc += v;
    return acc / static_cast<double>(values_.size());
}

} // namespace adlraw::adl
