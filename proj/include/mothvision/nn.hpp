#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mothvision/rng.hpp"
#include "mothvision/tensor.hpp"

namespace moth {

// One backbone stage: 3x3 convolution (stride 1, pad 1) + ReLU + optional
// 2x2 max pool.
struct StageSpec {
  int out_ch = 0;
  bool pool = false;
};

// Arch strings look like "8,16p,32p": channel count per stage, 'p' suffix
// marks a pooled stage. VGG-style stacks are expressible the same way.
std::vector<StageSpec> parse_arch(const std::string& arch);
std::string arch_to_string(const std::vector<StageSpec>& stages);

struct Conv2dParams {
  int in_ch = 0;
  int out_ch = 0;
  int ksize = 3;
  int stride = 1;
  int pad = 1;
  Tensor weight;  // [out_ch][in_ch][k][k]
  Tensor bias;    // [out_ch]

  void allocate();
  void init_uniform_fan_in(Rng& rng);  // U(+-1/sqrt(fan_in)) for weight and bias
};

Tensor conv2d_apply(const Conv2dParams& conv, const Tensor& x);

struct LinearParams {
  int in_dim = 0;
  int out_dim = 0;
  Tensor weight;  // [out][in]
  Tensor bias;    // [out]

  void allocate();
  void init_uniform_fan_in(Rng& rng);
};

std::vector<double> linear_apply(const LinearParams& fc, const std::vector<double>& x);

// Per-call activation record; forward is const so a model can serve many
// threads, each with its own trace.
struct ConvNetTrace {
  Tensor input;
  std::vector<Tensor> conv_inputs;  // input of each stage's conv
  std::vector<Tensor> pre_relu;     // conv output before ReLU
  std::vector<std::vector<std::int64_t>> pool_argmax;  // empty when no pool
};

struct ConvNetGrads {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;
  void zero();
};

// Plain convolutional feature stack. Outputs of any stage can serve as a
// feature map; the last stage's global average is the classifier feature.
class ConvNet {
 public:
  ConvNet() = default;
  ConvNet(int in_ch, std::vector<StageSpec> stages);

  void init(Rng& rng);

  int n_stages() const { return static_cast<int>(stages_.size()); }
  const StageSpec& stage(int i) const { return stages_[static_cast<size_t>(i)]; }
  Conv2dParams& conv(int i) { return convs_[static_cast<size_t>(i)]; }
  const Conv2dParams& conv(int i) const { return convs_[static_cast<size_t>(i)]; }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return stages_.empty() ? in_ch_ : stages_.back().out_ch; }

  // Spatial size of each stage output for a given input size.
  std::vector<std::pair<int, int>> stage_shapes(int h, int w) const;

  // Returns every stage's post-pool output, in order.
  std::vector<Tensor> forward_all(const Tensor& image, ConvNetTrace* trace = nullptr) const;

  // grad_stages[i] is the gradient arriving at stage i's output (empty
  // tensors are treated as zero). Parameter gradients accumulate into
  // `grads` when non-null. Returns the gradient with respect to the input.
  Tensor backward(const ConvNetTrace& trace, std::vector<Tensor> grad_stages,
                  ConvNetGrads* grads) const;

  ConvNetGrads make_grads() const;
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

 private:
  std::vector<int> stage_output_shape(int i, const ConvNetTrace& trace) const;

  int in_ch_ = 3;
  std::vector<StageSpec> stages_;
  std::vector<Conv2dParams> convs_;
};

// RMSProp with L2 weight decay folded into the gradient. State is keyed by
// position in the parameter list, which therefore must be stable across
// steps.
class RmsProp {
 public:
  RmsProp(double lr, double rho, double eps, double weight_decay)
      : lr_(lr), rho_(rho), eps_(eps), weight_decay_(weight_decay) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

 private:
  double lr_;
  double rho_;
  double eps_;
  double weight_decay_;
  std::vector<Tensor> sq_;
};

// Numerically stable helpers shared by the detector and classifier losses.
std::vector<double> softmax(const std::vector<double>& scores);
double log_sum_exp(const double* scores, int n);
double smooth_l1(double x, double beta = 1.0);
double smooth_l1_grad(double x, double beta = 1.0);

// Shared training recipe: RMSProp, L2 weight decay, step drops of the
// learning rate after fixed epochs.
struct TrainSchedule {
  int epochs = 60;
  double learning_rate = 1e-4;
  std::vector<int> lr_drop_epochs = {20, 40};
  double lr_drop_factor = 0.1;
  double weight_decay = 5e-4;
  double rho = 0.9;
  double eps = 1e-8;
  int batch_size = 8;

  // epoch is 1-based; the drop applies after the listed epoch.
  double lr_for_epoch(int epoch) const {
    double lr = learning_rate;
    for (int d : lr_drop_epochs) {
      if (epoch > d) lr *= lr_drop_factor;
    }
    return lr;
  }
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double extra = 0.0;  // per-task scalar (e.g. train accuracy)
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::string to_tsv() const;
};

}  // namespace moth
