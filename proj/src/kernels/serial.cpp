#include <algorithm>
#include <limits>

#include "ctxmatch/kernels.hpp"

namespace ctxmatch::kernels::serial {

void conv2d_forward(const Conv2dGeom& g, In in, In filt, In bias, Out out) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double* o = &out[(i * ow + j) * g.cout];
      for (std::size_t co = 0; co < g.cout; ++co) o[co] = bias[co];
      for (std::size_t a = 0; a < g.kh; ++a) {
        for (std::size_t b = 0; b < g.kw; ++b) {
          const double* x = &in[((i + a) * g.w + (j + b)) * g.cin];
          const double* f = &filt[(a * g.kw + b) * g.cin * g.cout];
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            const double v = x[ci];
            const double* fr = f + ci * g.cout;
            for (std::size_t co = 0; co < g.cout; ++co) o[co] += v * fr[co];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const Conv2dGeom& g, In gout, In filt, Out gin) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t a = 0; a < g.kh; ++a) {
        for (std::size_t b = 0; b < g.kw; ++b) {
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            for (std::size_t co = 0; co < g.cout; ++co) {
              gin[((i + a) * g.w + (j + b)) * g.cin + ci] +=
                  gout[(i * ow + j) * g.cout + co] * filt[((a * g.kw + b) * g.cin + ci) * g.cout + co];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_filter(const Conv2dGeom& g, In in, In gout, Out gfilt) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t a = 0; a < g.kh; ++a) {
        for (std::size_t b = 0; b < g.kw; ++b) {
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            for (std::size_t co = 0; co < g.cout; ++co) {
              gfilt[((a * g.kw + b) * g.cin + ci) * g.cout + co] +=
                  in[((i + a) * g.w + (j + b)) * g.cin + ci] * gout[(i * ow + j) * g.cout + co];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_bias(const Conv2dGeom& g, In gout, Out gbias) {
  const std::size_t cells = g.out_h() * g.out_w();
  for (std::size_t p = 0; p < cells; ++p) {
    for (std::size_t co = 0; co < g.cout; ++co) gbias[co] += gout[p * g.cout + co];
  }
}

void maxpool2d_forward(const Pool2dGeom& g, In in, Out out, Idx argmax) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t c = 0; c < g.c; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        bool first = true;
        for (std::size_t a = 0; a < g.ph; ++a) {
          for (std::size_t b = 0; b < g.pw; ++b) {
            const std::size_t idx = ((i * g.sh + a) * g.w + (j * g.sw + b)) * g.c + c;
            if (first || in[idx] > best) {
              best = in[idx];
              best_idx = idx;
              first = false;
            }
          }
        }
        out[(i * ow + j) * g.c + c] = best;
        argmax[(i * ow + j) * g.c + c] = best_idx;
      }
    }
  }
}

void adaptive_maxpool2d_forward(const AdaptivePoolGeom& g, In in, Out out, Idx argmax) {
  for (std::size_t i = 0; i < g.oh; ++i) {
    const std::size_t r0 = i * g.h / g.oh, r1 = ((i + 1) * g.h + g.oh - 1) / g.oh;
    for (std::size_t j = 0; j < g.ow; ++j) {
      const std::size_t c0 = j * g.w / g.ow, c1 = ((j + 1) * g.w + g.ow - 1) / g.ow;
      for (std::size_t c = 0; c < g.c; ++c) {
        double best = 0.0;
        std::size_t best_idx = 0;
        bool first = true;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t q = c0; q < c1; ++q) {
            const std::size_t idx = (r * g.w + q) * g.c + c;
            if (first || in[idx] > best) {
              best = in[idx];
              best_idx = idx;
              first = false;
            }
          }
        }
        out[(i * g.ow + j) * g.c + c] = best;
        argmax[(i * g.ow + j) * g.c + c] = best_idx;
      }
    }
  }
}

void maxpool_backward(std::size_t /*channels*/, In gout, IdxIn argmax, Out gin) {
  for (std::size_t p = 0; p < gout.size(); ++p) gin[argmax[p]] += gout[p];
}

void affine_forward(std::size_t din, std::size_t dout, In x, In w, In b, Out out) {
  for (std::size_t j = 0; j < dout; ++j) out[j] = b[j];
  for (std::size_t i = 0; i < din; ++i) {
    const double v = x[i];
    for (std::size_t j = 0; j < dout; ++j) out[j] += v * w[i * dout + j];
  }
}

void affine_backward(std::size_t din, std::size_t dout, In x, In w, In gout, Out gx, Out gw,
                     Out gb) {
  for (std::size_t i = 0; i < din; ++i) {
    for (std::size_t j = 0; j < dout; ++j) {
      if (!gx.empty()) gx[i] += w[i * dout + j] * gout[j];
      if (!gw.empty()) gw[i * dout + j] += x[i] * gout[j];
    }
  }
  if (!gb.empty()) {
    for (std::size_t j = 0; j < dout; ++j) gb[j] += gout[j];
  }
}

void gemm_nt(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[j * k + t];
      out[i * c + j] = s;
    }
  }
}

void gemm_nn_acc(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t t = 0; t < k; ++t) out[i * k + t] += a[i * c + j] * b[j * k + t];
    }
  }
}

void gemm_tn_acc(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out) {
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t t = 0; t < k; ++t) out[j * k + t] += a[i * c + j] * b[i * k + t];
    }
  }
}

}  // namespace ctxmatch::kernels::serial
