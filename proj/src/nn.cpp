#include "mothvision/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mothvision/kernels.hpp"

namespace moth {

std::vector<StageSpec> parse_arch(const std::string& arch) {
  std::vector<StageSpec> out;
  std::stringstream ss(arch);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    // trim
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    tok = tok.substr(b, e - b + 1);
    StageSpec s;
    if (tok.back() == 'p' || tok.back() == 'P') {
      s.pool = true;
      tok.pop_back();
    }
    try {
      s.out_ch = std::stoi(tok);
    } catch (...) {
      throw std::invalid_argument("parse_arch: bad stage token '" + tok + "'");
    }
    if (s.out_ch <= 0) throw std::invalid_argument("parse_arch: non-positive channel count");
    out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("parse_arch: empty architecture");
  return out;
}

std::string arch_to_string(const std::vector<StageSpec>& stages) {
  std::string out;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(stages[i].out_ch);
    if (stages[i].pool) out += "p";
  }
  return out;
}

void Conv2dParams::allocate() {
  weight = Tensor({out_ch, in_ch, ksize, ksize});
  bias = Tensor({out_ch});
}

void Conv2dParams::init_uniform_fan_in(Rng& rng) {
  allocate();
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * ksize * ksize);
  for (std::int64_t i = 0; i < weight.size(); ++i) weight[i] = rng.uniform(-bound, bound);
  for (std::int64_t i = 0; i < bias.size(); ++i) bias[i] = rng.uniform(-bound, bound);
}

Tensor conv2d_apply(const Conv2dParams& conv, const Tensor& x) {
  if (x.rank() != 3 || x.dim(0) != conv.in_ch) {
    throw std::invalid_argument("conv2d_apply: input shape does not match layer");
  }
  const int oh = kernels::conv2d_out_dim(x.dim(1), conv.ksize, conv.stride, conv.pad);
  const int ow = kernels::conv2d_out_dim(x.dim(2), conv.ksize, conv.stride, conv.pad);
  Tensor y({conv.out_ch, oh, ow});
  kernels::conv2d_forward(x.data(), conv.in_ch, x.dim(1), x.dim(2), conv.weight.data(),
                          conv.bias.data(), conv.out_ch, conv.ksize, conv.stride,
                          conv.pad, y.data());
  return y;
}

void LinearParams::allocate() {
  weight = Tensor({out_dim, in_dim});
  bias = Tensor({out_dim});
}

void LinearParams::init_uniform_fan_in(Rng& rng) {
  allocate();
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (std::int64_t i = 0; i < weight.size(); ++i) weight[i] = rng.uniform(-bound, bound);
  for (std::int64_t i = 0; i < bias.size(); ++i) bias[i] = rng.uniform(-bound, bound);
}

std::vector<double> linear_apply(const LinearParams& fc, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != fc.in_dim) {
    throw std::invalid_argument("linear_apply: dimension mismatch");
  }
  std::vector<double> y(static_cast<size_t>(fc.out_dim));
  kernels::linear_forward(x.data(), fc.weight.data(), fc.bias.data(), fc.in_dim,
                          fc.out_dim, y.data());
  return y;
}

void ConvNetGrads::zero() {
  for (auto& t : weight) t.fill(0.0);
  for (auto& t : bias) t.fill(0.0);
}

ConvNet::ConvNet(int in_ch, std::vector<StageSpec> stages)
    : in_ch_(in_ch), stages_(std::move(stages)) {
  int prev = in_ch_;
  for (const auto& s : stages_) {
    Conv2dParams c;
    c.in_ch = prev;
    c.out_ch = s.out_ch;
    c.allocate();
    convs_.push_back(std::move(c));
    prev = s.out_ch;
  }
}

void ConvNet::init(Rng& rng) {
  for (auto& c : convs_) c.init_uniform_fan_in(rng);
}

std::vector<std::pair<int, int>> ConvNet::stage_shapes(int h, int w) const {
  std::vector<std::pair<int, int>> out;
  for (const auto& s : stages_) {
    // 3x3 stride 1 pad 1 keeps size; pool halves (floor).
    if (s.pool) {
      h /= 2;
      w /= 2;
    }
    out.emplace_back(h, w);
  }
  return out;
}

std::vector<Tensor> ConvNet::forward_all(const Tensor& image, ConvNetTrace* trace) const {
  if (image.rank() != 3 || image.dim(0) != in_ch_) {
    throw std::invalid_argument("ConvNet::forward_all: bad input shape");
  }
  if (trace) {
    trace->input = image;
    trace->conv_inputs.clear();
    trace->pre_relu.clear();
    trace->pool_argmax.clear();
  }
  std::vector<Tensor> outputs;
  Tensor cur = image;
  for (int i = 0; i < n_stages(); ++i) {
    const Conv2dParams& c = convs_[static_cast<size_t>(i)];
    if (trace) trace->conv_inputs.push_back(cur);
    Tensor pre = conv2d_apply(c, cur);
    if (trace) trace->pre_relu.push_back(pre);
    Tensor post = pre;
    for (std::int64_t j = 0; j < post.size(); ++j) {
      if (post[j] < 0.0) post[j] = 0.0;
    }
    if (stages_[static_cast<size_t>(i)].pool) {
      const int ch = post.dim(0), h = post.dim(1), w = post.dim(2);
      Tensor pooled({ch, h / 2, w / 2});
      std::vector<std::int64_t> argmax(static_cast<size_t>(pooled.size()));
      kernels::maxpool2_forward(post.data(), ch, h, w, pooled.data(), argmax.data());
      if (trace) trace->pool_argmax.push_back(std::move(argmax));
      cur = std::move(pooled);
    } else {
      if (trace) trace->pool_argmax.emplace_back();
      cur = std::move(post);
    }
    outputs.push_back(cur);
  }
  return outputs;
}

Tensor ConvNet::backward(const ConvNetTrace& trace, std::vector<Tensor> grad_stages,
                         ConvNetGrads* grads) const {
  if (static_cast<int>(grad_stages.size()) != n_stages()) {
    throw std::invalid_argument("ConvNet::backward: one gradient slot per stage required");
  }
  Tensor upstream;  // gradient wrt current stage output
  for (int i = n_stages() - 1; i >= 0; --i) {
    const Conv2dParams& c = convs_[static_cast<size_t>(i)];
    const Tensor& pre = trace.pre_relu[static_cast<size_t>(i)];
    const Tensor& conv_in = trace.conv_inputs[static_cast<size_t>(i)];

    Tensor g;
    if (!upstream.empty() && !grad_stages[static_cast<size_t>(i)].empty()) {
      g = std::move(upstream);
      const Tensor& extra = grad_stages[static_cast<size_t>(i)];
      for (std::int64_t j = 0; j < g.size(); ++j) g[j] += extra[j];
    } else if (!upstream.empty()) {
      g = std::move(upstream);
    } else if (!grad_stages[static_cast<size_t>(i)].empty()) {
      g = std::move(grad_stages[static_cast<size_t>(i)]);
    } else {
      g = Tensor(stage_output_shape(i, trace));
    }

    Tensor g_pre(pre.shape());
    if (stages_[static_cast<size_t>(i)].pool) {
      kernels::maxpool2_backward(g.data(), g.dim(0), g.dim(1), g.dim(2),
                                 trace.pool_argmax[static_cast<size_t>(i)].data(),
                                 g_pre.data());
    } else {
      g_pre = std::move(g);
    }
    // ReLU mask
    for (std::int64_t j = 0; j < g_pre.size(); ++j) {
      if (pre[j] <= 0.0) g_pre[j] = 0.0;
    }

    if (grads) {
      kernels::conv2d_backward_params(
          conv_in.data(), c.in_ch, conv_in.dim(1), conv_in.dim(2), g_pre.data(),
          c.out_ch, g_pre.dim(1), g_pre.dim(2), c.ksize, c.stride, c.pad,
          grads->weight[static_cast<size_t>(i)].data(),
          grads->bias[static_cast<size_t>(i)].data());
    }
    Tensor g_in(conv_in.shape());
    kernels::conv2d_backward_input(g_pre.data(), c.out_ch, g_pre.dim(1), g_pre.dim(2),
                                   c.weight.data(), c.in_ch, conv_in.dim(1),
                                   conv_in.dim(2), c.ksize, c.stride, c.pad,
                                   g_in.data());
    upstream = std::move(g_in);
  }
  return upstream;
}

std::vector<int> ConvNet::stage_output_shape(int i, const ConvNetTrace& trace) const {
  const Tensor& pre = trace.pre_relu[static_cast<size_t>(i)];
  if (stages_[static_cast<size_t>(i)].pool) {
    return {pre.dim(0), pre.dim(1) / 2, pre.dim(2) / 2};
  }
  return pre.shape();
}

ConvNetGrads ConvNet::make_grads() const {
  ConvNetGrads g;
  for (const auto& c : convs_) {
    g.weight.emplace_back(c.weight.shape());
    g.bias.emplace_back(c.bias.shape());
  }
  return g;
}

std::vector<Tensor*> ConvNet::parameters() {
  std::vector<Tensor*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

std::vector<const Tensor*> ConvNet::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

void RmsProp::step(const std::vector<Tensor*>& params,
                   const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("RmsProp::step: size mismatch");
  if (sq_.size() != params.size()) {
    sq_.clear();
    for (const Tensor* p : params) sq_.emplace_back(p->shape());
  }
  for (size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    const Tensor& g = *grads[t];
    Tensor& s = sq_[t];
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + weight_decay_ * p[i];
      s[i] = rho_ * s[i] + (1.0 - rho_) * gi * gi;
      p[i] -= lr_ * gi / (std::sqrt(s[i]) + eps_);
    }
  }
}

std::vector<double> softmax(const std::vector<double>& scores) {
  std::vector<double> out(scores.size());
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double log_sum_exp(const double* scores, int n) {
  double mx = scores[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, scores[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(scores[i] - mx);
  return mx + std::log(sum);
}

double smooth_l1(double x, double beta) {
  const double a = std::abs(x);
  if (a < beta) return 0.5 * x * x / beta;
  return a - 0.5 * beta;
}

double smooth_l1_grad(double x, double beta) {
  if (std::abs(x) < beta) return x / beta;
  return x > 0 ? 1.0 : -1.0;
}

std::string TrainLog::to_tsv() const {
  std::string out = "epoch\tlr\tloss\textra\n";
  char buf[160];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.17g\n", e.epoch, e.lr, e.loss, e.extra);
    out += buf;
  }
  return out;
}

}  // namespace moth
