#include "adlraw/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <memory>
#include <string>

namespace adlraw::numcore::ops {

namespace {

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

template <typename T>
bool wants_grad(const BasicTape<T>& tape, std::initializer_list<const BasicTensor<T>*> operands) {
    if (!tape.recording()) return false;
    for (const auto* t : operands) {
        if (t->defined() && t->requires_grad()) return true;
    }
    return false;
}

template <typename T>
BasicTensor<T> make_output(Shape shape, std::vector<T> data, bool requires_grad, const char* op) {
    for (const T& v : data) {
        if (!std::isfinite(v)) throw NonFiniteError(std::string(op) + " produced a non-finite value");
    }
    BasicTensor<T> out(std::move(shape), std::move(data));
    out.set_requires_grad(requires_grad);
    return out;
}

template <typename T>
void ensure(const ImplPtr<T>& p) {
    if (p->grad.empty()) p->grad.assign(p->data.size(), T(0));
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ContractViolation(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
    }
}

template <typename T>
void require_rank(const BasicTensor<T>& a, std::size_t rank, const char* op, const char* what) {
    if (a.rank() != rank) {
        throw ContractViolation(std::string(op) + ": " + what + " must have rank " +
                                std::to_string(rank) + ", got " + shape_str(a.shape()));
    }
}

enum class Binary { add, sub, mul };

template <typename T>
BasicTensor<T> binary(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b,
                      Binary kind, const char* name) {
    require_same_shape(a, b, name);
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (kind) {
        case Binary::add: out[i] = av[i] + bv[i]; break;
        case Binary::sub: out[i] = av[i] - bv[i]; break;
        case Binary::mul: out[i] = av[i] * bv[i]; break;
        }
    }
    const bool grad = wants_grad(tape, {&a, &b});
    auto result = make_output<T>(a.shape(), std::move(out), grad, name);
    if (grad) {
        ImplPtr<T> ai = a.handle(), bi = b.handle(), oi = result.handle();
        tape.record({a.node_id(), b.node_id()}, result.node_id(), [ai, bi, oi, kind] {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            if (ai->requires_grad) {
                ensure(ai);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ai->grad[i] += kind == Binary::mul ? g[i] * bi->data[i] : g[i];
            }
            if (bi->requires_grad) {
                ensure(bi);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (kind == Binary::mul) bi->grad[i] += g[i] * ai->data[i];
                    else if (kind == Binary::sub) bi->grad[i] -= g[i];
                    else bi->grad[i] += g[i];
                }
            }
        });
    }
    return result;
}

// C[M x N] += A[M x K] * B[K x N]
template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
    for (std::size_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        const T* a = A + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            const T s = a[k];
            const T* b = B + k * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += s * b[j];
        }
    }
}

// C[M x N] += A[M x K] * B[N x K]^T
template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
    for (std::size_t i = 0; i < M; ++i) {
        const T* a = A + i * K;
        for (std::size_t j = 0; j < N; ++j) {
            const T* b = B + j * K;
            T acc = T(0);
            for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
            C[i * N + j] += acc;
        }
    }
}

// C[M x N] += A[K x M]^T * B[K x N]
template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
    for (std::size_t k = 0; k < K; ++k) {
        const T* a = A + k * M;
        const T* b = B + k * N;
        for (std::size_t i = 0; i < M; ++i) {
            const T s = a[i];
            T* c = C + i * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += s * b[j];
        }
    }
}

struct ConvGeometry {
    std::size_t channels, height, width, ksize, stride, pad, out_h, out_w;
    std::size_t rows() const { return channels * ksize * ksize; }
    std::size_t cols() const { return out_h * out_w; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
    const std::size_t P = g.cols();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ky = 0; ky < g.ksize; ++ky) {
            for (std::size_t kx = 0; kx < g.ksize; ++kx) {
                T* row = col + ((c * g.ksize + ky) * g.ksize + kx) * P;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
                        const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                                            ix < static_cast<long>(g.width);
                        row[oy * g.out_w + ox] =
                            inside ? x[(c * g.height + static_cast<std::size_t>(iy)) * g.width +
                                       static_cast<std::size_t>(ix)]
                                   : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* dx) {
    const std::size_t P = g.cols();
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t ky = 0; ky < g.ksize; ++ky) {
            for (std::size_t kx = 0; kx < g.ksize; ++kx) {
                const T* row = col + ((c * g.ksize + ky) * g.ksize + kx) * P;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
                    if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
                        if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                        dx[(c * g.height + static_cast<std::size_t>(iy)) * g.width +
                           static_cast<std::size_t>(ix)] += row[oy * g.out_w + ox];
                    }
                }
            }
        }
    }
}

} // namespace

template <typename T>
BasicTensor<T> add(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return binary(tape, a, b, Binary::add, "add");
}

template <typename T>
BasicTensor<T> sub(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return binary(tape, a, b, Binary::sub, "sub");
}

template <typename T>
BasicTensor<T> mul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return binary(tape, a, b, Binary::mul, "mul");
}

template <typename T>
BasicTensor<T> add_scalar(BasicTape<T>& tape, const BasicTensor<T>& a, T c) {
    const auto av = a.data();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
    const bool grad = wants_grad(tape, {&a});
    auto result = make_output<T>(a.shape(), std::move(out), grad, "add_scalar");
    if (grad) {
        ImplPtr<T> ai = a.handle(), oi = result.handle();
        tape.record({a.node_id()}, result.node_id(), [ai, oi] {
            if (oi->grad.empty()) return;
            ensure(ai);
            for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> tanh(BasicTape<T>& tape, const BasicTensor<T>& a) {
    const auto av = a.data();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
    const bool grad = wants_grad(tape, {&a});
    auto result = make_output<T>(a.shape(), std::move(out), grad, "tanh");
    if (grad) {
        ImplPtr<T> ai = a.handle(), oi = result.handle();
        tape.record({a.node_id()}, result.node_id(), [ai, oi] {
            if (oi->grad.empty()) return;
            ensure(ai);
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                const T y = oi->data[i];
                ai->grad[i] += oi->grad[i] * (T(1) - y * y);
            }
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> relu(BasicTape<T>& tape, const BasicTensor<T>& a) {
    const auto av = a.data();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T(0) ? av[i] : T(0);
    if (tape.kink_probe_enabled()) {
        auto& sig = tape.kink_signature();
        for (const T& v : av) sig.push_back(v > T(0) ? 1 : 0);
    }
    const bool grad = wants_grad(tape, {&a});
    auto result = make_output<T>(a.shape(), std::move(out), grad, "relu");
    if (grad) {
        ImplPtr<T> ai = a.handle(), oi = result.handle();
        tape.record({a.node_id()}, result.node_id(), [ai, oi] {
            if (oi->grad.empty()) return;
            ensure(ai);
            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                if (ai->data[i] > T(0)) ai->grad[i] += oi->grad[i];
            }
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> scale_shift(BasicTape<T>& tape, const BasicTensor<T>& x,
                           const BasicTensor<T>& scale, const BasicTensor<T>& shift) {
    require_rank(x, 4, "scale_shift", "features");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    const bool per_sample = scale.numel() == N * C && N > 1;
    const std::size_t expect = per_sample ? N * C : C;
    if (scale.numel() != expect || shift.numel() != expect ||
        (!per_sample && scale.numel() != C)) {
        throw ContractViolation("scale_shift: scale " + shape_str(scale.shape()) + " / shift " +
                                shape_str(shift.shape()) + " not broadcastable to " +
                                shape_str(x.shape()));
    }
    const auto xv = x.data();
    const auto sv = scale.data();
    const auto bv = shift.data();
    std::vector<T> out(xv.size());
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t pc = per_sample ? n * C + c : c;
            const T s = sv[pc];
            const T b = bv[pc];
            const std::size_t base = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) out[base + i] = s * xv[base + i] + b;
        }
    }
    const bool grad = wants_grad(tape, {&x, &scale, &shift});
    auto result = make_output<T>(x.shape(), std::move(out), grad, "scale_shift");
    if (grad) {
        ImplPtr<T> xi = x.handle(), si = scale.handle(), bi = shift.handle(), oi = result.handle();
        tape.record({x.node_id(), scale.node_id(), shift.node_id()}, result.node_id(),
                    [xi, si, bi, oi, N, C, HW, per_sample] {
                        if (oi->grad.empty()) return;
                        const auto& g = oi->grad;
                        if (xi->requires_grad) ensure(xi);
                        if (si->requires_grad) ensure(si);
                        if (bi->requires_grad) ensure(bi);
                        for (std::size_t n = 0; n < N; ++n) {
                            for (std::size_t c = 0; c < C; ++c) {
                                const std::size_t pc = per_sample ? n * C + c : c;
                                const std::size_t base = (n * C + c) * HW;
                                T gs = T(0), gb = T(0);
                                for (std::size_t i = 0; i < HW; ++i) {
                                    gs += g[base + i] * xi->data[base + i];
                                    gb += g[base + i];
                                }
                                if (xi->requires_grad) {
                                    const T s = si->data[pc];
                                    for (std::size_t i = 0; i < HW; ++i) xi->grad[base + i] += s * g[base + i];
                                }
                                if (si->requires_grad) si->grad[pc] += gs;
                                if (bi->requires_grad) bi->grad[pc] += gb;
                            }
                        }
                    });
    }
    return result;
}

template <typename T>
BasicTensor<T> linear(BasicTape<T>& tape, const BasicTensor<T>& x,
                      const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    require_rank(x, 2, "linear", "input");
    require_rank(weight, 2, "linear", "weight");
    const std::size_t N = x.dim(0), D = x.dim(1), E = weight.dim(1);
    if (weight.dim(0) != D) {
        throw ContractViolation("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                                shape_str(weight.shape()));
    }
    if (bias.numel() != E) {
        throw ContractViolation("linear: bias " + shape_str(bias.shape()) + " does not match width " +
                                std::to_string(E));
    }
    std::vector<T> out(N * E);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t e = 0; e < E; ++e) out[n * E + e] = bias.data()[e];
    gemm_nn<T>(N, E, D, x.data().data(), weight.data().data(), out.data());
    const bool grad = wants_grad(tape, {&x, &weight, &bias});
    auto result = make_output<T>(Shape{N, E}, std::move(out), grad, "linear");
    if (grad) {
        ImplPtr<T> xi = x.handle(), wi = weight.handle(), bi = bias.handle(), oi = result.handle();
        tape.record({x.node_id(), weight.node_id(), bias.node_id()}, result.node_id(),
                    [xi, wi, bi, oi, N, D, E] {
                        if (oi->grad.empty()) return;
                        const T* g = oi->grad.data();
                        if (xi->requires_grad) {
                            ensure(xi);
                            gemm_nt<T>(N, D, E, g, wi->data.data(), xi->grad.data());
                        }
                        if (wi->requires_grad) {
                            ensure(wi);
                            gemm_tn<T>(D, E, N, xi->data.data(), g, wi->grad.data());
                        }
                        if (bi->requires_grad) {
                            ensure(bi);
                            for (std::size_t n = 0; n < N; ++n)
                                for (std::size_t e = 0; e < E; ++e) bi->grad[e] += g[n * E + e];
                        }
                    });
    }
    return result;
}

template <typename T>
BasicTensor<T> conv2d(BasicTape<T>& tape, const BasicTensor<T>& input,
                      const BasicTensor<T>& kernel, const BasicTensor<T>& bias,
                      std::size_t stride, std::size_t pad) {
    require_rank(input, 4, "conv2d", "input");
    require_rank(kernel, 4, "conv2d", "kernel");
    if (input.dim(1) != kernel.dim(1) || kernel.dim(2) != kernel.dim(3)) {
        throw ContractViolation("conv2d: input " + shape_str(input.shape()) +
                                " incompatible with kernel " + shape_str(kernel.shape()));
    }
    if (stride < 1) throw ContractViolation("conv2d: stride must be >= 1");
    const std::size_t N = input.dim(0), O = kernel.dim(0), K = kernel.dim(2);
    const std::size_t H = input.dim(2), W = input.dim(3);
    if (H + 2 * pad < K || W + 2 * pad < K) {
        throw ContractViolation("conv2d: kernel " + shape_str(kernel.shape()) +
                                " larger than padded input " + shape_str(input.shape()));
    }
    if (bias.defined() && bias.numel() != O) {
        throw ContractViolation("conv2d: bias " + shape_str(bias.shape()) + " does not match " +
                                std::to_string(O) + " output channels");
    }
    const ConvGeometry geo{input.dim(1), H, W, K, stride, pad, (H + 2 * pad - K) / stride + 1,
                           (W + 2 * pad - K) / stride + 1};
    const std::size_t R = geo.rows(), P = geo.cols();
    const std::size_t in_sz = geo.channels * H * W, out_sz = O * P;

    std::vector<T> out(N * out_sz, T(0));
    std::vector<T> col(R * P);
    const T* wv = kernel.data().data();
    for (std::size_t n = 0; n < N; ++n) {
        T* o = out.data() + n * out_sz;
        if (bias.defined()) {
            for (std::size_t oc = 0; oc < O; ++oc)
                for (std::size_t p = 0; p < P; ++p) o[oc * P + p] = bias.data()[oc];
        }
        im2col(input.data().data() + n * in_sz, geo, col.data());
        gemm_nn<T>(O, P, R, wv, col.data(), o);
    }

    const bool grad = wants_grad(tape, {&input, &kernel, &bias});
    auto result = make_output<T>(Shape{N, O, geo.out_h, geo.out_w}, std::move(out), grad, "conv2d");
    if (grad) {
        ImplPtr<T> xi = input.handle(), wi = kernel.handle(), oi = result.handle();
        ImplPtr<T> bi = bias.defined() ? bias.handle() : nullptr;
        std::vector<std::uint64_t> ids{input.node_id(), kernel.node_id()};
        if (bias.defined()) ids.push_back(bias.node_id());
        tape.record(std::move(ids), result.node_id(), [xi, wi, bi, oi, geo, N, O, in_sz, out_sz] {
            if (oi->grad.empty()) return;
            const std::size_t R = geo.rows(), P = geo.cols();
            std::vector<T> col(R * P);
            std::vector<T> dcol;
            if (xi->requires_grad) {
                ensure(xi);
                dcol.resize(R * P);
            }
            if (wi->requires_grad) ensure(wi);
            if (bi && bi->requires_grad) ensure(bi);
            for (std::size_t n = 0; n < N; ++n) {
                const T* g = oi->grad.data() + n * out_sz;
                if (wi->requires_grad) {
                    im2col(xi->data.data() + n * in_sz, geo, col.data());
                    gemm_nt<T>(O, R, P, g, col.data(), wi->grad.data());
                }
                if (bi && bi->requires_grad) {
                    for (std::size_t oc = 0; oc < O; ++oc) {
                        T acc = T(0);
                        for (std::size_t p = 0; p < P; ++p) acc += g[oc * P + p];
                        bi->grad[oc] += acc;
                    }
                }
                if (xi->requires_grad) {
                    std::fill(dcol.begin(), dcol.end(), T(0));
                    gemm_tn<T>(R, P, O, wi->data.data(), g, dcol.data());
                    col2im(dcol.data(), geo, xi->grad.data() + n * in_sz);
                }
            }
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> upsample2x(BasicTape<T>& tape, const BasicTensor<T>& x) {
    require_rank(x, 4, "upsample2x", "input");
    const std::size_t NC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
    const auto xv = x.data();
    std::vector<T> out(NC * 4 * H * W);
    for (std::size_t m = 0; m < NC; ++m) {
        const T* src = xv.data() + m * H * W;
        T* dst = out.data() + m * 4 * H * W;
        for (std::size_t y = 0; y < 2 * H; ++y)
            for (std::size_t xx = 0; xx < 2 * W; ++xx) dst[y * 2 * W + xx] = src[(y / 2) * W + xx / 2];
    }
    const bool grad = wants_grad(tape, {&x});
    auto result = make_output<T>(Shape{x.dim(0), x.dim(1), 2 * H, 2 * W}, std::move(out), grad, "upsample2x");
    if (grad) {
        ImplPtr<T> xi = x.handle(), oi = result.handle();
        tape.record({x.node_id()}, result.node_id(), [xi, oi, NC, H, W] {
            if (oi->grad.empty()) return;
            ensure(xi);
            for (std::size_t m = 0; m < NC; ++m) {
                const T* g = oi->grad.data() + m * 4 * H * W;
                T* d = xi->grad.data() + m * H * W;
                for (std::size_t y = 0; y < 2 * H; ++y)
                    for (std::size_t xx = 0; xx < 2 * W; ++xx) d[(y / 2) * W + xx / 2] += g[y * 2 * W + xx];
            }
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> concat_channels(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank(a, 4, "concat_channels", "first operand");
    require_rank(b, 4, "concat_channels", "second operand");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        throw ContractViolation("concat_channels: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const std::size_t N = a.dim(0), HW = a.dim(2) * a.dim(3);
    const std::size_t sa = a.dim(1) * HW, sb = b.dim(1) * HW;
    std::vector<T> out(N * (sa + sb));
    for (std::size_t n = 0; n < N; ++n) {
        std::copy_n(a.data().data() + n * sa, sa, out.data() + n * (sa + sb));
        std::copy_n(b.data().data() + n * sb, sb, out.data() + n * (sa + sb) + sa);
    }
    const bool grad = wants_grad(tape, {&a, &b});
    auto result = make_output<T>(Shape{N, a.dim(1) + b.dim(1), a.dim(2), a.dim(3)}, std::move(out), grad,
                                 "concat_channels");
    if (grad) {
        ImplPtr<T> ai = a.handle(), bi = b.handle(), oi = result.handle();
        tape.record({a.node_id(), b.node_id()}, result.node_id(), [ai, bi, oi, N, sa, sb] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) ensure(ai);
            if (bi->requires_grad) ensure(bi);
            for (std::size_t n = 0; n < N; ++n) {
                const T* g = oi->grad.data() + n * (sa + sb);
                if (ai->requires_grad)
                    for (std::size_t i = 0; i < sa; ++i) ai->grad[n * sa + i] += g[i];
                if (bi->requires_grad)
                    for (std::size_t i = 0; i < sb; ++i) bi->grad[n * sb + i] += g[sa + i];
            }
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> sum(BasicTape<T>& tape, const BasicTensor<T>& a) {
    T acc = T(0);
    for (const T& v : a.data()) acc += v;
    const bool grad = wants_grad(tape, {&a});
    auto result = make_output<T>(Shape{1}, std::vector<T>{acc}, grad, "sum");
    if (grad) {
        ImplPtr<T> ai = a.handle(), oi = result.handle();
        tape.record({a.node_id()}, result.node_id(), [ai, oi] {
            if (oi->grad.empty()) return;
            ensure(ai);
            const T g = oi->grad[0];
            for (auto& v : ai->grad) v += g;
        });
    }
    return result;
}

template <typename T>
BasicTensor<T> l1_loss(BasicTape<T>& tape, const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    require_same_shape(pred, target, "l1_loss");
    const auto pv = pred.data();
    const auto tv = target.data();
    T acc = T(0);
    for (std::size_t i = 0; i < pv.size(); ++i) acc += std::abs(pv[i] - tv[i]);
    const T n = static_cast<T>(pv.size());
    if (tape.kink_probe_enabled()) {
        auto& sig = tape.kink_signature();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const T d = pv[i] - tv[i];
            sig.push_back(d > T(0) ? 2 : (d < T(0) ? 0 : 1));
        }
    }
    const bool grad = wants_grad(tape, {&pred});
    auto result = make_output<T>(Shape{1}, std::vector<T>{acc / n}, grad, "l1_loss");
    if (grad) {
        ImplPtr<T> pi = pred.handle(), ti = target.handle(), oi = result.handle();
        tape.record({pred.node_id()}, result.node_id(), [pi, ti, oi, n] {
            if (oi->grad.empty()) return;
            ensure(pi);
            const T g = oi->grad[0] / n;
            for (std::size_t i = 0; i < pi->data.size(); ++i) {
                const T d = pi->data[i] - ti->data[i];
                if (d > T(0)) pi->grad[i] += g;
                else if (d < T(0)) pi->grad[i] -= g;
            }
        });
    }
    return result;
}

#define ADLRAW_INSTANTIATE_OPS(T)                                                                  \
    template BasicTensor<T> add(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);      \
    template BasicTensor<T> sub(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);      \
    template BasicTensor<T> mul(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);      \
    template BasicTensor<T> add_scalar(BasicTape<T>&, const BasicTensor<T>&, T);                   \
    template BasicTensor<T> tanh(BasicTape<T>&, const BasicTensor<T>&);                            \
    template BasicTensor<T> relu(BasicTape<T>&, const BasicTensor<T>&);                            \
    template BasicTensor<T> scale_shift(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                        const BasicTensor<T>&);                                    \
    template BasicTensor<T> linear(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&,    \
                                   const BasicTensor<T>&);                                         \
    template BasicTensor<T> conv2d(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&,    \
                                   const BasicTensor<T>&, std::size_t, std::size_t);               \
    template BasicTensor<T> upsample2x(BasicTape<T>&, const BasicTensor<T>&);                      \
    template BasicTensor<T> concat_channels(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> sum(BasicTape<T>&, const BasicTensor<T>&);                             \
    template BasicTensor<T> l1_loss(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);

ADLRAW_INSTANTIATE_OPS(float)
ADLRAW_INSTANTIATE_OPS(double)

#undef ADLRAW_INSTANTIATE_OPS

} // namespace adlraw::numcore::ops
