#include "mothvision/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace moth::kernels {

int conv2d_out_dim(int in, int ksize, int stride, int pad) {
  return (in + 2 * pad - ksize) / stride + 1;
}

void conv2d_forward(const double* x, int in_ch, int h, int w,
                    const double* weight, const double* bias, int out_ch,
                    int ksize, int stride, int pad, double* y) {
  const int oh = conv2d_out_dim(h, ksize, stride, pad);
  const int ow = conv2d_out_dim(w, ksize, stride, pad);
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* wc = weight + static_cast<std::int64_t>(oc) * in_ch * ksize * ksize;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias ? bias[oc] : 0.0;
        for (int ic = 0; ic < in_ch; ++ic) {
          const double* xc = x + static_cast<std::int64_t>(ic) * h * w;
          const double* wk = wc + static_cast<std::int64_t>(ic) * ksize * ksize;
          for (int ky = 0; ky < ksize; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < ksize; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= w) continue;
              acc += xc[static_cast<std::int64_t>(iy) * w + ix] * wk[ky * ksize + kx];
            }
          }
        }
        y[(static_cast<std::int64_t>(oc) * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward_input(const double* gy, int out_ch, int oh, int ow,
                           const double* weight, int in_ch, int h, int w,
                           int ksize, int stride, int pad, double* gx) {
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < in_ch; ++ic) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (int oc = 0; oc < out_ch; ++oc) {
          const double* wk = weight +
              (static_cast<std::int64_t>(oc) * in_ch + ic) * ksize * ksize;
          const double* gc = gy + static_cast<std::int64_t>(oc) * oh * ow;
          for (int ky = 0; ky < ksize; ++ky) {
            const int num_y = iy + pad - ky;
            if (num_y < 0 || num_y % stride != 0) continue;
            const int oy = num_y / stride;
            if (oy >= oh) continue;
            for (int kx = 0; kx < ksize; ++kx) {
              const int num_x = ix + pad - kx;
              if (num_x < 0 || num_x % stride != 0) continue;
              const int ox = num_x / stride;
              if (ox >= ow) continue;
              acc += gc[static_cast<std::int64_t>(oy) * ow + ox] * wk[ky * ksize + kx];
            }
          }
        }
        gx[(static_cast<std::int64_t>(ic) * h + iy) * w + ix] = acc;
      }
    }
  }
}

void conv2d_backward_params(const double* x, int in_ch, int h, int w,
                            const double* gy, int out_ch, int oh, int ow,
                            int ksize, int stride, int pad, double* gw,
                            double* gb) {
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* gc = gy + static_cast<std::int64_t>(oc) * oh * ow;
    double bacc = 0.0;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) bacc += gc[i];
    gb[oc] += bacc;
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* xc = x + static_cast<std::int64_t>(ic) * h * w;
      double* wk = gw + (static_cast<std::int64_t>(oc) * in_ch + ic) * ksize * ksize;
      for (int ky = 0; ky < ksize; ++ky) {
        for (int kx = 0; kx < ksize; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= w) continue;
              acc += xc[static_cast<std::int64_t>(iy) * w + ix] *
                     gc[static_cast<std::int64_t>(oy) * ow + ox];
            }
          }
          wk[ky * ksize + kx] += acc;
        }
      }
    }
  }
}

void maxpool2_forward(const double* x, int ch, int h, int w, double* y,
                      std::int64_t* argmax) {
  const int oh = h / 2;
  const int ow = w / 2;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < ch; ++c) {
    const double* xc = x + static_cast<std::int64_t>(c) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        std::int64_t best = static_cast<std::int64_t>(2 * oy) * w + 2 * ox;
        double bv = xc[best];
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::int64_t idx = static_cast<std::int64_t>(2 * oy + dy) * w + 2 * ox + dx;
            if (xc[idx] > bv) {
              bv = xc[idx];
              best = idx;
            }
          }
        }
        const std::int64_t o = (static_cast<std::int64_t>(c) * oh + oy) * ow + ox;
        y[o] = bv;
        argmax[o] = static_cast<std::int64_t>(c) * h * w + best;
      }
    }
  }
}

void maxpool2_backward(const double* gy, int ch, int oh, int ow,
                       const std::int64_t* argmax, double* gx) {
  // Windows are disjoint, so the scatter below is race-free.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < ch; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const std::int64_t o = (static_cast<std::int64_t>(c) * oh + oy) * ow + ox;
        gx[argmax[o]] += gy[o];
      }
    }
  }
}

void linear_forward(const double* x, const double* weight, const double* bias,
                    int in_dim, int out_dim, double* y) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_dim; ++o) {
    const double* wr = weight + static_cast<std::int64_t>(o) * in_dim;
    double acc = bias ? bias[o] : 0.0;
    for (int i = 0; i < in_dim; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward_input(const double* gy, const double* weight, int in_dim,
                           int out_dim, double* gx) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < in_dim; ++i) {
    double acc = 0.0;
    for (int o = 0; o < out_dim; ++o) {
      acc += weight[static_cast<std::int64_t>(o) * in_dim + i] * gy[o];
    }
    gx[i] = acc;
  }
}

void linear_backward_params(const double* x, const double* gy, int in_dim,
                            int out_dim, double* gw, double* gb) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_dim; ++o) {
    double* wr = gw + static_cast<std::int64_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) wr[i] += gy[o] * x[i];
    gb[o] += gy[o];
  }
}

void resize_bilinear(const double* x, int ch, int h, int w, double* y, int oh,
                     int ow) {
  const double sy = oh > 1 ? static_cast<double>(h - 1) / (oh - 1) : 0.0;
  const double sx = ow > 1 ? static_cast<double>(w - 1) / (ow - 1) : 0.0;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < ch; ++c) {
    const double* xc = x + static_cast<std::int64_t>(c) * h * w;
    double* yc = y + static_cast<std::int64_t>(c) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const double fy = oy * sy;
      const int y0 = std::min(static_cast<int>(fy), h - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double wy = fy - y0;
      for (int ox = 0; ox < ow; ++ox) {
        const double fx = ox * sx;
        const int x0 = std::min(static_cast<int>(fx), w - 1);
        const int x1 = std::min(x0 + 1, w - 1);
        const double wx = fx - x0;
        const double v00 = xc[static_cast<std::int64_t>(y0) * w + x0];
        const double v01 = xc[static_cast<std::int64_t>(y0) * w + x1];
        const double v10 = xc[static_cast<std::int64_t>(y1) * w + x0];
        const double v11 = xc[static_cast<std::int64_t>(y1) * w + x1];
        yc[static_cast<std::int64_t>(oy) * ow + ox] =
            (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) +
            wy * ((1.0 - wx) * v10 + wx * v11);
      }
    }
  }
}

void iou_matrix(const double* a, int na, const double* b, int nb, double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < na; ++i) {
    const double ax0 = a[4 * i], ay0 = a[4 * i + 1], ax1 = a[4 * i + 2], ay1 = a[4 * i + 3];
    const double aa = (ax1 - ax0) * (ay1 - ay0);
    for (int j = 0; j < nb; ++j) {
      const double bx0 = b[4 * j], by0 = b[4 * j + 1], bx1 = b[4 * j + 2], by1 = b[4 * j + 3];
      const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
      const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
      const double inter = ix * iy;
      const double uni = aa + (bx1 - bx0) * (by1 - by0) - inter;
      out[static_cast<std::int64_t>(i) * nb + j] = uni <= 0.0 ? 0.0 : inter / uni;
    }
  }
}

void kmeans_assign(const double* pts, int n, int dim, const double* centers,
                   int k, int* labels) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* p = pts + static_cast<std::int64_t>(i) * dim;
    int best = 0;
    double best_d = 0.0;
    for (int c = 0; c < k; ++c) {
      const double* q = centers + static_cast<std::int64_t>(c) * dim;
      double d = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double diff = p[j] - q[j];
        d += diff * diff;
      }
      if (c == 0 || d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[i] = best;
  }
}

}  // namespace moth::kernels
