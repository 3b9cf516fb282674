#pragma once

#include "adlraw/numcore/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace adlraw::numcore {

/// Define-by-run record of differentiable operations. A tape belongs to one
/// forward/backward pass and one thread; it is cleared between training steps.
template <typename T>
class BasicTape {
public:
    struct Entry {
        std::vector<std::uint64_t> inputs;
        std::uint64_t output = 0;
        std::function<void()> backward;
    };

    explicit BasicTape(bool recording = true) : recording_(recording) {}

    BasicTape(const BasicTape&) = delete;
    BasicTape& operator=(const BasicTape&) = delete;

    /// Tape that never records; used for inference.
    static BasicTape inference() { return BasicTape(false); }

    bool recording() const { return recording_; }
    std::size_t size() const { return entries_.size(); }
    bool consumed() const { return consumed_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void record(std::vector<std::uint64_t> inputs, std::uint64_t output,
                std::function<void()> backward);

    /// Seeds d(loss)/d(loss) = 1 and runs every backward rule in reverse order.
    /// The tape is consumed afterwards.
    void backward(BasicTensor<T>& loss);

    void clear();

    // Optional activation-pattern probe for gradient checking. When enabled,
    // piecewise ops append one byte per element describing which linear
    // piece the element landed on.
    void enable_kink_probe(bool on) { probe_enabled_ = on; }
    bool kink_probe_enabled() const { return probe_enabled_; }
    std::vector<std::uint8_t>& kink_signature() { return signature_; }

private:
    bool recording_ = true;
    bool consumed_ = false;
    bool probe_enabled_ = false;
    std::vector<Entry> entries_;
    std::vector<std::uint8_t> signature_;
};

using Tape = BasicTape<float>;
using Tape64 = BasicTape<double>;

} // namespace adlraw::numcore
