#pragma once

#include <cstdint>

namespace moth::kernels {

// Data-parallel inner loops used by the network, the part miner and the data
// pipeline. Every function here has an identical twin in kernels::serial with
// plain loops; the OpenMP versions assign each output element to exactly one
// thread and keep the per-element reduction order identical to the serial
// code, so the two produce bitwise-equal results for any thread count.
// tools/bench_kernels.cpp times both sets side by side.

// y[oc][oh][ow] = b[oc] + sum_{ic,ky,kx} x[ic][oh*stride-pad+ky][ow*stride-pad+kx] * w[oc][ic][ky][kx]
void conv2d_forward(const double* x, int in_ch, int h, int w,
                    const double* weight, const double* bias, int out_ch,
                    int ksize, int stride, int pad, double* y);

// Gather formulation: gx[ic][iy][ix] accumulates w * gy over all output
// positions whose receptive field covers (iy, ix).
void conv2d_backward_input(const double* gy, int out_ch, int oh, int ow,
                           const double* weight, int in_ch, int h, int w,
                           int ksize, int stride, int pad, double* gx);

// Accumulates (+=) into gw / gb, parallel over output channels.
void conv2d_backward_params(const double* x, int in_ch, int h, int w,
                            const double* gy, int out_ch, int oh, int ow,
                            int ksize, int stride, int pad, double* gw,
                            double* gb);

// 2x2 max pooling with stride 2. Trailing odd row/column is dropped.
// argmax stores the flat input index of each window maximum (first-wins ties).
void maxpool2_forward(const double* x, int ch, int h, int w, double* y,
                      std::int64_t* argmax);
void maxpool2_backward(const double* gy, int ch, int oh, int ow,
                       const std::int64_t* argmax, double* gx);

// y[o] = b[o] + sum_i w[o][i] * x[i]
void linear_forward(const double* x, const double* weight, const double* bias,
                    int in_dim, int out_dim, double* y);
void linear_backward_input(const double* gy, const double* weight, int in_dim,
                           int out_dim, double* gx);
void linear_backward_params(const double* x, const double* gy, int in_dim,
                            int out_dim, double* gw, double* gb);

// Bilinear resize of a planar [ch][h][w] image, edge-clamped.
void resize_bilinear(const double* x, int ch, int h, int w, double* y, int oh,
                     int ow);

// iou[i][j] for corner-form boxes given as (x_min, y_min, x_max, y_max) quads.
void iou_matrix(const double* a, int na, const double* b, int nb, double* out);

// Nearest-center assignment in squared Euclidean distance, ties to the lowest
// center index.
void kmeans_assign(const double* pts, int n, int dim, const double* centers,
                   int k, int* labels);

namespace serial {
void conv2d_forward(const double* x, int in_ch, int h, int w,
                    const double* weight, const double* bias, int out_ch,
                    int ksize, int stride, int pad, double* y);
void conv2d_backward_input(const double* gy, int out_ch, int oh, int ow,
                           const double* weight, int in_ch, int h, int w,
                           int ksize, int stride, int pad, double* gx);
void conv2d_backward_params(const double* x, int in_ch, int h, int w,
                            const double* gy, int out_ch, int oh, int ow,
                            int ksize, int stride, int pad, double* gw,
                            double* gb);
void maxpool2_forward(const double* x, int ch, int h, int w, double* y,
                      std::int64_t* argmax);
void maxpool2_backward(const double* gy, int ch, int oh, int ow,
                       const std::int64_t* argmax, double* gx);
void linear_forward(const double* x, const double* weight, const double* bias,
                    int in_dim, int out_dim, double* y);
void linear_backward_input(const double* gy, const double* weight, int in_dim,
                           int out_dim, double* gx);
void linear_backward_params(const double* x, const double* gy, int in_dim,
                            int out_dim, double* gw, double* gb);
void resize_bilinear(const double* x, int ch, int h, int w, double* y, int oh,
                     int ow);
void iou_matrix(const double* a, int na, const double* b, int nb, double* out);
void kmeans_assign(const double* pts, int n, int dim, const double* centers,
                   int k, int* labels);
}  // namespace serial

int conv2d_out_dim(int in, int ksize, int stride, int pad);

}  // namespace moth::kernels
