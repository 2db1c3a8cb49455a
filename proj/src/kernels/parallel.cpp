#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ctxmatch/kernels.hpp"

namespace ctxmatch::kernels::parallel {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = std::size_t{1} << 15;

using Index = std::int64_t;

inline bool worth_it(std::size_t work) { return work >= kMinParallelWork && !omp_in_parallel(); }

}  // namespace

void conv2d_forward(const Conv2dGeom& g, In in, In filt, In bias, Out out) {
  const Index oh = static_cast<Index>(g.out_h());
  const std::size_t ow = g.out_w();
  const std::size_t work = g.out_h() * ow * g.kh * g.kw * g.cin * g.cout;
#pragma omp parallel for schedule(static) if (worth_it(work))
  for (Index ii = 0; ii < oh; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
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
  const std::size_t work = oh * ow * g.kh * g.kw * g.cin * g.cout;
#pragma omp parallel if (worth_it(work))
  {
    std::vector<double> acc(g.cin);
#pragma omp for schedule(static)
    for (Index pp = 0; pp < static_cast<Index>(g.h); ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      const std::size_t a_lo = p + 1 > oh ? p + 1 - oh : 0, a_hi = std::min(g.kh - 1, p);
      for (std::size_t q = 0; q < g.w; ++q) {
        const std::size_t b_lo = q + 1 > ow ? q + 1 - ow : 0, b_hi = std::min(g.kw - 1, q);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t a = a_lo; a <= a_hi; ++a) {
          for (std::size_t b = b_lo; b <= b_hi; ++b) {
            const double* go = &gout[((p - a) * ow + (q - b)) * g.cout];
            const double* f = &filt[(a * g.kw + b) * g.cin * g.cout];
            for (std::size_t ci = 0; ci < g.cin; ++ci) {
              const double* fr = f + ci * g.cout;
              double s = 0.0;
              for (std::size_t co = 0; co < g.cout; ++co) s += go[co] * fr[co];
              acc[ci] += s;
            }
          }
        }
        double* gi = &gin[(p * g.w + q) * g.cin];
        for (std::size_t ci = 0; ci < g.cin; ++ci) gi[ci] += acc[ci];
      }
    }
  }
}

void conv2d_backward_filter(const Conv2dGeom& g, In in, In gout, Out gfilt) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t work = oh * ow * g.kh * g.kw * g.cin * g.cout;
  const Index taps = static_cast<Index>(g.kh * g.kw);
#pragma omp parallel for schedule(static) if (worth_it(work))
  for (Index tap = 0; tap < taps; ++tap) {
    const std::size_t a = static_cast<std::size_t>(tap) / g.kw, b = static_cast<std::size_t>(tap) % g.kw;
    double* gf = &gfilt[(a * g.kw + b) * g.cin * g.cout];
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const double* x = &in[((i + a) * g.w + (j + b)) * g.cin];
        const double* go = &gout[(i * ow + j) * g.cout];
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
          const double v = x[ci];
          double* gfr = gf + ci * g.cout;
          for (std::size_t co = 0; co < g.cout; ++co) gfr[co] += v * go[co];
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
  const std::size_t ow = g.out_w();
  const std::size_t work = g.out_h() * ow * g.c * g.ph * g.pw;
#pragma omp parallel for schedule(static) if (worth_it(work))
  for (Index ii = 0; ii < static_cast<Index>(g.out_h()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t c = 0; c < g.c; ++c) {
        std::size_t best_idx = ((i * g.sh) * g.w + j * g.sw) * g.c + c;
        double best = in[best_idx];
        for (std::size_t a = 0; a < g.ph; ++a) {
          for (std::size_t b = 0; b < g.pw; ++b) {
            const std::size_t idx = ((i * g.sh + a) * g.w + (j * g.sw + b)) * g.c + c;
            if (in[idx] > best) {
              best = in[idx];
              best_idx = idx;
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
  const std::size_t work = g.h * g.w * g.c;
#pragma omp parallel for schedule(static) if (worth_it(work))
  for (Index ii = 0; ii < static_cast<Index>(g.oh); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::size_t r0 = i * g.h / g.oh, r1 = ((i + 1) * g.h + g.oh - 1) / g.oh;
    for (std::size_t j = 0; j < g.ow; ++j) {
      const std::size_t c0 = j * g.w / g.ow, c1 = ((j + 1) * g.w + g.ow - 1) / g.ow;
      for (std::size_t c = 0; c < g.c; ++c) {
        std::size_t best_idx = (r0 * g.w + c0) * g.c + c;
        double best = in[best_idx];
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t q = c0; q < c1; ++q) {
            const std::size_t idx = (r * g.w + q) * g.c + c;
            if (in[idx] > best) {
              best = in[idx];
              best_idx = idx;
            }
          }
        }
        out[(i * g.ow + j) * g.c + c] = best;
        argmax[(i * g.ow + j) * g.c + c] = best_idx;
      }
    }
  }
}

void maxpool_backward(std::size_t channels, In gout, IdxIn argmax, Out gin) {
#pragma omp parallel for schedule(static) if (worth_it(gout.size() * 8))
  for (Index cc = 0; cc < static_cast<Index>(channels); ++cc) {
    for (std::size_t p = static_cast<std::size_t>(cc); p < gout.size(); p += channels) {
      gin[argmax[p]] += gout[p];
    }
  }
}

void affine_forward(std::size_t din, std::size_t dout, In x, In w, In b, Out out) {
  const std::size_t work = din * dout;
  constexpr std::size_t kBlock = 64;
  const Index blocks = static_cast<Index>((dout + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static) if (worth_it(work))
  for (Index blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk) * kBlock, j1 = std::min(dout, j0 + kBlock);
    for (std::size_t j = j0; j < j1; ++j) out[j] = b[j];
    for (std::size_t i = 0; i < din; ++i) {
      const double v = x[i];
      const double* wr = &w[i * dout];
      for (std::size_t j = j0; j < j1; ++j) out[j] += v * wr[j];
    }
  }
}

void affine_backward(std::size_t din, std::size_t dout, In x, In w, In gout, Out gx, Out gw,
                     Out gb) {
  const std::size_t work = din * dout;
#pragma omp parallel for schedule(static) if (worth_it(work))
  for (Index ii = 0; ii < static_cast<Index>(din); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* wr = &w[i * dout];
    if (!gx.empty()) {
      double& gxi = gx[i];
      for (std::size_t j = 0; j < dout; ++j) gxi += wr[j] * gout[j];
    }
    if (!gw.empty()) {
      double* gwr = &gw[i * dout];
      const double v = x[i];
      for (std::size_t j = 0; j < dout; ++j) gwr[j] += v * gout[j];
    }
  }
  if (!gb.empty()) {
    for (std::size_t j = 0; j < dout; ++j) gb[j] += gout[j];
  }
}

void gemm_nt(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out) {
#pragma omp parallel for schedule(static) if (worth_it(r * c * k))
  for (Index ii = 0; ii < static_cast<Index>(r); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* ar = &a[i * k];
    for (std::size_t j = 0; j < c; ++j) {
      const double* br = &b[j * k];
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += ar[t] * br[t];
      out[i * c + j] = s;
    }
  }
}

void gemm_nn_acc(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out) {
#pragma omp parallel for schedule(static) if (worth_it(r * c * k))
  for (Index ii = 0; ii < static_cast<Index>(r); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* o = &out[i * k];
    for (std::size_t j = 0; j < c; ++j) {
      const double v = a[i * c + j];
      const double* br = &b[j * k];
      for (std::size_t t = 0; t < k; ++t) o[t] += v * br[t];
    }
  }
}

void gemm_tn_acc(std::size_t r, std::size_t c, std::size_t k, In a, In b, Out out) {
#pragma omp parallel for schedule(static) if (worth_it(r * c * k))
  for (Index jj = 0; jj < static_cast<Index>(c); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double* o = &out[j * k];
    for (std::size_t i = 0; i < r; ++i) {
      const double v = a[i * c + j];
      const double* br = &b[i * k];
      for (std::size_t t = 0; t < k; ++t) o[t] += v * br[t];
    }
  }
}

}  // namespace ctxmatch::kernels::parallel
