#pragma once

// Dense compute kernels behind the autodiff graph.
//
// Two implementations share every signature:
//   serial::   straightforward loop nests, the reference used by tests.
//   parallel:: OpenMP versions used by the graph. Each output element is
//              produced by exactly one thread with a fixed reduction order,
//              so results do not depend on the thread count. Forward kernels
//              reproduce serial:: bit-for-bit; backward kernels use a gather
//              formulation and agree with serial:: to rounding.
//
// Layouts are row-major: activations [h x w x c], conv filters
// [kh x kw x cin x cout], affine weights [din x dout].

#include <cstddef>
#include <span>

namespace ctxmatch::kernels {

struct Conv2dGeom {
  std::size_t h, w, cin, kh, kw, cout;
  std::size_t out_h() const { return h - kh + 1; }
  std::size_t out_w() const { return w - kw + 1; }
};

struct Pool2dGeom {
  std::size_t h, w, c, ph, pw, sh, sw;
  std::size_t out_h() const { return (h - ph) / sh + 1; }
  std::size_t out_w() const { return (w - pw) / sw + 1; }
};

// Adaptive max pooling onto a fixed (oh x ow) grid. Bin i covers rows
// [floor(i*h/oh), ceil((i+1)*h/oh)).
struct AdaptivePoolGeom {
  std::size_t h, w, c, oh, ow;
};

using In = std::span<const double>;
using Out = std::span<double>;
using Idx = std::span<std::size_t>;
using IdxIn = std::span<const std::size_t>;

#define CTXMATCH_KERNEL_DECLS                                                             \
  void conv2d_forward(const Conv2dGeom& g, In in, In filt, In bias, Out out);             \
  void conv2d_backward_input(const Conv2dGeom& g, In gout, In filt, Out gin);             \
  void conv2d_backward_filter(const Conv2dGeom& g, In in, In gout, Out gfilt);            \
  void conv2d_backward_bias(const Conv2dGeom& g, In gout, Out gbias);                     \
  void maxpool2d_forward(const Pool2dGeom& g, In in, Out out, Idx argmax);                \
  void adaptive_maxpool2d_forward(const AdaptivePoolGeom& g, In in, Out out, Idx argmax); \
  void maxpool_backward(std::size_t channels, In gout, IdxIn argmax, Out gin);            \
  void affine_forward(std::size_t din, std::size_t dout, In x, In w, In b, Out out);      \
  void affine_backward(std::size_t din, std::size_t dout, In x, In w, In gout, Out gx,    \
                       Out gw, Out gb);                                                   \
  void gemm_nt(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out);         \
  void gemm_nn_acc(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out);     \
  void gemm_tn_acc(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out);

// gemm_nt:     out[r x c]  = a[r x k] * b[c x k]^T
// gemm_nn_acc: out[r x k] += a[r x c] * b[c x k]
// gemm_tn_acc: out[c x k] += a[r x c]^T * b[r x k]
// maxpool_backward scatters gout through argmax (flat input indices); argmax
// entries of one channel always land in that channel.

namespace serial {
CTXMATCH_KERNEL_DECLS
}  // namespace serial

namespace parallel {
CTXMATCH_KERNEL_DECLS
}  // namespace parallel

#undef CTXMATCH_KERNEL_DECLS

}  // namespace ctxmatch::kernels
