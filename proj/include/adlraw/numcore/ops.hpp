#pragma once

#include "adlraw/numcore/tape.hpp"
#include "adlraw/numcore/tensor.hpp"

#include <cstddef>

// Differentiable operations. Every op records a backward rule on the tape
// when the tape is recording and at least one operand requires a gradient.

namespace adlraw::numcore::ops {

template <typename T>
BasicTensor<T> add(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);
/// a + c elementwise for a constant c.
template <typename T>
BasicTensor<T> add_scalar(BasicTape<T>& tape, const BasicTensor<T>& a, T c);
template <typename T>
BasicTensor<T> tanh(BasicTape<T>& tape, const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> relu(BasicTape<T>& tape, const BasicTensor<T>& a);

/// Per-channel affine transform of an N x C x H x W feature map:
/// out[n,c,:,:] = scale[n,c] * x[n,c,:,:] + shift[n,c].
/// scale and shift are N x C, or 1 x C / C to broadcast over the batch.
template <typename T>
BasicTensor<T> scale_shift(BasicTape<T>& tape, const BasicTensor<T>& x,
                           const BasicTensor<T>& scale, const BasicTensor<T>& shift);

/// x (N x D) times weight (D x E) plus bias (1 x E or E).
template <typename T>
BasicTensor<T> linear(BasicTape<T>& tape, const BasicTensor<T>& x,
                      const BasicTensor<T>& weight, const BasicTensor<T>& bias);

/// 2-D cross-correlation. input is N x I x H x W, kernel is O x I x K x K,
/// bias is O (may be undefined).
template <typename T>
BasicTensor<T> conv2d(BasicTape<T>& tape, const BasicTensor<T>& input,
                      const BasicTensor<T>& kernel, const BasicTensor<T>& bias,
                      std::size_t stride, std::size_t pad);

template <typename T>
BasicTensor<T> conv2d(BasicTape<T>& tape, const BasicTensor<T>& input,
                      const BasicTensor<T>& kernel, std::size_t stride, std::size_t pad) {
    return conv2d(tape, input, kernel, BasicTensor<T>{}, stride, pad);
}

/// Nearest-neighbour 2x spatial upsampling of N x C x H x W.
template <typename T>
BasicTensor<T> upsample2x(BasicTape<T>& tape, const BasicTensor<T>& x);

/// Concatenation of two N x C x H x W maps along the channel axis.
template <typename T>
BasicTensor<T> concat_channels(BasicTape<T>& tape, const BasicTensor<T>& a,
                               const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sum(BasicTape<T>& tape, const BasicTensor<T>& a);

/// Mean absolute difference. The target is treated as a constant; the
/// subgradient at zero difference is 0.
template <typename T>
BasicTensor<T> l1_loss(BasicTape<T>& tape, const BasicTensor<T>& pred,
                       const BasicTensor<T>& target);

} // namespace adlraw::numcore::ops
