#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace smra::ad {

using Mat = Eigen::MatrixXd;

// A trainable matrix with gradient and AdamW moments. Owned by a
// ParamStore; tapes reference it by pointer, so addresses must be stable.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat m;
  Mat v;

  explicit Param(std::string n, Mat init)
      : name(std::move(n)),
        value(std::move(init)),
        grad(Mat::Zero(value.rows(), value.cols())),
        m(Mat::Zero(value.rows(), value.cols())),
        v(Mat::Zero(value.rows(), value.cols())) {}
};

class ParamStore {
 public:
  Param& add(std::string name, Mat init);
  Param& get(const std::string& name);
  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }

  void zero_grads();
  std::size_t flat_size() const;
  double flat_get(std::size_t i) const;
  void flat_set(std::size_t i, double v);
  double flat_grad(std::size_t i) const;
  double grad_norm() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

// Decoupled-weight-decay Adam. Gradients are accumulated externally
// (averaged over the batch by the caller's backward seeds).
struct AdamW {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool clip = false;
  double clip_norm = 1.0;
  long step_count = 0;

  void step(ParamStore& params);
};

// Eager reverse-mode tape over Eigen dense matrices. Values are computed
// at op-recording time; backward() replays the recorded closures in
// reverse. Graphs are built per instance and discarded, while Params
// persist across tapes and receive accumulated gradients.
class Tape {
 public:
  int input(Mat value);  // constant leaf, no gradient flow

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

  // Seeds d(root)/d(root) = seed (root must be 1x1) and accumulates
  // gradients into every reachable node and Param.
  void backward(int root, double seed = 1.0);

  int matmul(int a, int b);                 // A * B
  int matmul_nt(int a, int b);              // A * B^T
  int matmul_param(int a, Param& w);        // A * w
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);                    // elementwise
  int scale(int a, double c);
  int add_rowvec_param(int a, Param& bias);  // bias is 1 x cols
  int param_rows(Param& p, int offset, int count);
  int tanh_(int a);
  int sigmoid_(int a);
  int relu_(int a);
  int gelu_(int a);
  int embedding(Param& table, std::vector<int> ids);
  int rows(int a, int offset, int count);
  int cols(int a, int offset, int count);
  int transpose(int a);
  int concat_cols(int a, int b);
  int concat_rows(const std::vector<int>& parts);
  int max_over_rows(int a);    // 1 x d column maxima, gradient to argmax
  int mean_over_rows(int a);   // 1 x d column means
  int sum_all(int a);          // 1 x 1
  int masked_sum(int a, std::vector<std::uint8_t> mask);   // over rows of n x 1
  int softmax_masked(int scores, std::vector<std::uint8_t> mask);  // n x 1
  int row_softmax_masked(int scores, std::vector<std::uint8_t> attend);  // per row
  int div_by_scalar(int a, int s);  // elementwise a / s(0,0)
  int layer_norm(int x, Param& gain, Param& bias, double eps = 1e-5);
  // logsumexp(logits) - logits[gold]; logits is 1 x C
  int cross_entropy_logits(int logits, int gold);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> back;
  };
  std::vector<Node> nodes_;

  int push(Mat value, std::function<void(Tape&)> back = nullptr);
  Mat& grad_mut(int id) { return nodes_[id].grad; }

  friend struct TapeBackdoor;
};

}  // namespace smra::ad
