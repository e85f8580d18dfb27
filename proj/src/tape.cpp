#include "smra/tape.hpp"

#include <cmath>
#include <limits>

#include "smra/errors.hpp"

namespace smra::ad {

Param& ParamStore::add(std::string name, Mat init) {
  params_.push_back(std::make_unique<Param>(std::move(name), std::move(init)));
  return *params_.back();
}

Param& ParamStore::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ValueError("no such parameter: " + name);
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParamStore::flat_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

namespace {

template <typename Fn>
void with_flat_index(const std::vector<std::unique_ptr<Param>>& params, std::size_t i, Fn&& fn) {
  for (const auto& p : params) {
    const auto sz = static_cast<std::size_t>(p->value.size());
    if (i < sz) {
      fn(*p, static_cast<Eigen::Index>(i));
      return;
    }
    i -= sz;
  }
  throw ValueError("flat parameter index out of range");
}

}  // namespace

double ParamStore::flat_get(std::size_t i) const {
  double out = 0;
  with_flat_index(params_, i, [&](Param& p, Eigen::Index k) { out = p.value(k); });
  return out;
}

void ParamStore::flat_set(std::size_t i, double v) {
  with_flat_index(params_, i, [&](Param& p, Eigen::Index k) { p.value(k) = v; });
}

double ParamStore::flat_grad(std::size_t i) const {
  double out = 0;
  with_flat_index(params_, i, [&](Param& p, Eigen::Index k) { out = p.grad(k); });
  return out;
}

double ParamStore::grad_norm() const {
  double sq = 0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void AdamW::step(ParamStore& params) {
  if (clip) {
    const double norm = params.grad_norm();
    if (norm > clip_norm) {
      const double s = clip_norm / norm;
      for (auto& p : params.all()) p->grad *= s;
    }
  }
  step_count += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (auto& p : params.all()) {
    p->m = beta1 * p->m + (1.0 - beta1) * p->grad;
    p->v = beta2 * p->v + (1.0 - beta2) * p->grad.cwiseProduct(p->grad).eval();
    const Mat m_hat = p->m / bc1;
    const Mat v_hat = p->v / bc2;
    p->value -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    if (weight_decay > 0) p->value -= (lr * weight_decay) * p->value;
  }
}

int Tape::push(Mat value, std::function<void(Tape&)> back) {
  Node node;
  node.grad = Mat::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Mat value) { return push(std::move(value)); }

void Tape::backward(int root, double seed) {
  if (nodes_[root].value.size() != 1) throw ShapeError("backward root must be scalar");
  nodes_[root].grad(0, 0) += seed;
  for (int i = root; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

int Tape::matmul(int a, int b) {
  const int id = push(value(a) * value(b));
  nodes_[id].back = [id, a, b](Tape& t) {
    t.grad_mut(a) += t.grad(id) * t.value(b).transpose();
    t.grad_mut(b) += t.value(a).transpose() * t.grad(id);
  };
  return id;
}

int Tape::matmul_nt(int a, int b) {
  const int id = push(value(a) * value(b).transpose());
  nodes_[id].back = [id, a, b](Tape& t) {
    t.grad_mut(a) += t.grad(id) * t.value(b);
    t.grad_mut(b) += t.grad(id).transpose() * t.value(a);
  };
  return id;
}

int Tape::matmul_param(int a, Param& w) {
  Param* wp = &w;
  const int id = push(value(a) * w.value);
  nodes_[id].back = [id, a, wp](Tape& t) {
    t.grad_mut(a) += t.grad(id) * wp->value.transpose();
    wp->grad += t.value(a).transpose() * t.grad(id);
  };
  return id;
}

int Tape::add(int a, int b) {
  const int id = push(value(a) + value(b));
  nodes_[id].back = [id, a, b](Tape& t) {
    t.grad_mut(a) += t.grad(id);
    t.grad_mut(b) += t.grad(id);
  };
  return id;
}

int Tape::sub(int a, int b) {
  const int id = push(value(a) - value(b));
  nodes_[id].back = [id, a, b](Tape& t) {
    t.grad_mut(a) += t.grad(id);
    t.grad_mut(b) -= t.grad(id);
  };
  return id;
}

int Tape::mul(int a, int b) {
  const int id = push(value(a).cwiseProduct(value(b)));
  nodes_[id].back = [id, a, b](Tape& t) {
    t.grad_mut(a) += t.grad(id).cwiseProduct(t.value(b));
    t.grad_mut(b) += t.grad(id).cwiseProduct(t.value(a));
  };
  return id;
}

int Tape::scale(int a, double c) {
  const int id = push(c * value(a));
  nodes_[id].back = [id, a, c](Tape& t) { t.grad_mut(a) += c * t.grad(id); };
  return id;
}

int Tape::add_rowvec_param(int a, Param& bias) {
  Param* bp = &bias;
  Mat out = value(a);
  out.rowwise() += bias.value.row(0);
  const int id = push(std::move(out));
  nodes_[id].back = [id, a, bp](Tape& t) {
    t.grad_mut(a) += t.grad(id);
    bp->grad.row(0) += t.grad(id).colwise().sum();
  };
  return id;
}

int Tape::param_rows(Param& p, int offset, int count) {
  Param* pp = &p;
  const int id = push(p.value.middleRows(offset, count));
  nodes_[id].back = [id, pp, offset, count](Tape& t) {
    pp->grad.middleRows(offset, count) += t.grad(id);
  };
  return id;
}

int Tape::tanh_(int a) {
  const int id = push(value(a).array().tanh().matrix());
  nodes_[id].back = [id, a](Tape& t) {
    t.grad_mut(a).array() += t.grad(id).array() * (1.0 - t.value(id).array().square());
  };
  return id;
}

int Tape::sigmoid_(int a) {
  const int id = push((1.0 / (1.0 + (-value(a).array()).exp())).matrix());
  nodes_[id].back = [id, a](Tape& t) {
    t.grad_mut(a).array() +=
        t.grad(id).array() * t.value(id).array() * (1.0 - t.value(id).array());
  };
  return id;
}

int Tape::relu_(int a) {
  const int id = push(value(a).cwiseMax(0.0));
  nodes_[id].back = [id, a](Tape& t) {
    t.grad_mut(a).array() += t.grad(id).array() * (t.value(a).array() > 0.0).cast<double>();
  };
  return id;
}

int Tape::gelu_(int a) {
  static constexpr double kInvSqrt2 = 0.7071067811865475244;
  static constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  Mat out = value(a);
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double x = out(k);
    out(k) = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  const int id = push(std::move(out));
  nodes_[id].back = [id, a](Tape& t) {
    const Mat& x = t.value(a);
    Mat& ga = t.grad_mut(a);
    const Mat& g = t.grad(id);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double xi = x(k);
      const double cdf = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
      ga(k) += g(k) * (cdf + xi * pdf);
    }
  };
  return id;
}

int Tape::embedding(Param& table, std::vector<int> ids) {
  Param* tp = &table;
  Mat out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
  const int id = push(std::move(out));
  nodes_[id].back = [id, tp, ids = std::move(ids)](Tape& t) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      tp->grad.row(ids[i]) += t.grad(id).row(static_cast<Eigen::Index>(i));
  };
  return id;
}

int Tape::rows(int a, int offset, int count) {
  const int id = push(value(a).middleRows(offset, count));
  nodes_[id].back = [id, a, offset, count](Tape& t) {
    t.grad_mut(a).middleRows(offset, count) += t.grad(id);
  };
  return id;
}

int Tape::cols(int a, int offset, int count) {
  const int id = push(value(a).middleCols(offset, count));
  nodes_[id].back = [id, a, offset, count](Tape& t) {
    t.grad_mut(a).middleCols(offset, count) += t.grad(id);
  };
  return id;
}

int Tape::transpose(int a) {
  const int id = push(value(a).transpose());
  nodes_[id].back = [id, a](Tape& t) { t.grad_mut(a) += t.grad(id).transpose(); };
  return id;
}

int Tape::concat_cols(int a, int b) {
  Mat out(value(a).rows(), value(a).cols() + value(b).cols());
  out << value(a), value(b);
  const int id = push(std::move(out));
  nodes_[id].back = [id, a, b](Tape& t) {
    const auto ca = t.value(a).cols();
    t.grad_mut(a) += t.grad(id).leftCols(ca);
    t.grad_mut(b) += t.grad(id).rightCols(t.value(b).cols());
  };
  return id;
}

int Tape::concat_rows(const std::vector<int>& parts) {
  Eigen::Index total = 0;
  for (int p : parts) total += value(p).rows();
  Mat out(total, value(parts[0]).cols());
  Eigen::Index at = 0;
  for (int p : parts) {
    out.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  const int id = push(std::move(out));
  nodes_[id].back = [id, parts](Tape& t) {
    Eigen::Index at = 0;
    for (int p : parts) {
      const auto r = t.value(p).rows();
      t.grad_mut(p) += t.grad(id).middleRows(at, r);
      at += r;
    }
  };
  return id;
}

int Tape::max_over_rows(int a) {
  const Mat& x = value(a);
  Mat out(1, x.cols());
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < x.rows(); ++i) {
      if (x(i, j) > x(best, j)) best = i;
    }
    arg[static_cast<std::size_t>(j)] = best;
    out(0, j) = x(best, j);
  }
  const int id = push(std::move(out));
  nodes_[id].back = [id, a, arg = std::move(arg)](Tape& t) {
    for (Eigen::Index j = 0; j < t.value(id).cols(); ++j)
      t.grad_mut(a)(arg[static_cast<std::size_t>(j)], j) += t.grad(id)(0, j);
  };
  return id;
}

int Tape::mean_over_rows(int a) {
  const auto n = value(a).rows();
  const int id = push(value(a).colwise().mean());
  nodes_[id].back = [id, a, n](Tape& t) {
    t.grad_mut(a).rowwise() += (t.grad(id) / static_cast<double>(n)).row(0);
  };
  return id;
}

int Tape::sum_all(int a) {
  Mat out(1, 1);
  out(0, 0) = value(a).sum();
  const int id = push(std::move(out));
  nodes_[id].back = [id, a](Tape& t) { t.grad_mut(a).array() += t.grad(id)(0, 0); };
  return id;
}

int Tape::masked_sum(int a, std::vector<std::uint8_t> mask) {
  const Mat& x = value(a);
  if (static_cast<std::size_t>(x.rows()) != mask.size())
    throw ShapeError("masked_sum mask length mismatch");
  Mat out(1, 1);
  double s = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) s += x(i, 0);
  }
  out(0, 0) = s;
  const int id = push(std::move(out));
  nodes_[id].back = [id, a, mask = std::move(mask)](Tape& t) {
    for (Eigen::Index i = 0; i < t.value(a).rows(); ++i)
      if (mask[static_cast<std::size_t>(i)]) t.grad_mut(a)(i, 0) += t.grad(id)(0, 0);
  };
  return id;
}

int Tape::softmax_masked(int scores, std::vector<std::uint8_t> mask) {
  const Mat& s = value(scores);
  if (static_cast<std::size_t>(s.rows()) != mask.size() || s.cols() != 1)
    throw ShapeError("softmax_masked expects n x 1 scores with aligned mask");
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    if (mask[static_cast<std::size_t>(i)]) mx = std::max(mx, s(i, 0));
  Mat y = Mat::Zero(s.rows(), 1);
  double z = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    y(i, 0) = std::exp(s(i, 0) - mx);
    z += y(i, 0);
  }
  if (z <= 0) throw ValueError("softmax over empty mask");
  y /= z;
  const int id = push(std::move(y));
  nodes_[id].back = [id, scores, mask = std::move(mask)](Tape& t) {
    const Mat& y = t.value(id);
    const Mat& g = t.grad(id);
    double dot = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (mask[static_cast<std::size_t>(i)]) dot += g(i, 0) * y(i, 0);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (mask[static_cast<std::size_t>(i)])
        t.grad_mut(scores)(i, 0) += y(i, 0) * (g(i, 0) - dot);
  };
  return id;
}

int Tape::row_softmax_masked(int scores, std::vector<std::uint8_t> attend) {
  const Mat& s = value(scores);
  if (static_cast<std::size_t>(s.cols()) != attend.size())
    throw ShapeError("row_softmax_masked mask length mismatch");
  Mat y = Mat::Zero(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (attend[static_cast<std::size_t>(j)]) mx = std::max(mx, s(r, j));
    double z = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (!attend[static_cast<std::size_t>(j)]) continue;
      y(r, j) = std::exp(s(r, j) - mx);
      z += y(r, j);
    }
    y.row(r) /= z;
  }
  const int id = push(std::move(y));
  nodes_[id].back = [id, scores, attend = std::move(attend)](Tape& t) {
    const Mat& y = t.value(id);
    const Mat& g = t.grad(id);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      double dot = 0;
      for (Eigen::Index j = 0; j < y.cols(); ++j)
        if (attend[static_cast<std::size_t>(j)]) dot += g(r, j) * y(r, j);
      for (Eigen::Index j = 0; j < y.cols(); ++j)
        if (attend[static_cast<std::size_t>(j)])
          t.grad_mut(scores)(r, j) += y(r, j) * (g(r, j) - dot);
    }
  };
  return id;
}

int Tape::div_by_scalar(int a, int s) {
  const double sv = value(s)(0, 0);
  const int id = push(value(a) / sv);
  nodes_[id].back = [id, a, s, sv](Tape& t) {
    t.grad_mut(a) += t.grad(id) / sv;
    t.grad_mut(s)(0, 0) -= t.grad(id).cwiseProduct(t.value(id)).sum() / sv;
  };
  return id;
}

int Tape::layer_norm(int x, Param& gain, Param& bias, double eps) {
  Param* gp = &gain;
  Param* bp = &bias;
  const Mat& in = value(x);
  Mat xhat(in.rows(), in.cols());
  std::vector<double> inv_sigma(static_cast<std::size_t>(in.rows()));
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mu = in.row(r).mean();
    const double var = (in.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[static_cast<std::size_t>(r)] = is;
    xhat.row(r) = ((in.row(r).array() - mu) * is).matrix();
  }
  Mat out(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    out.row(r) = xhat.row(r).cwiseProduct(gain.value.row(0)) + bias.value.row(0);
  const int id = push(std::move(out));
  nodes_[id].back = [id, x, gp, bp, xhat = std::move(xhat),
                     inv_sigma = std::move(inv_sigma)](Tape& t) {
    const Mat& g = t.grad(id);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gp->value.row(0));
      const double mean_dxhat = dxhat.mean();
      const double mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(r)).mean();
      t.grad_mut(x).row(r) +=
          inv_sigma[static_cast<std::size_t>(r)] *
          (dxhat.array() - mean_dxhat - xhat.row(r).array() * mean_dxhat_xhat).matrix();
      gp->grad.row(0) += g.row(r).cwiseProduct(xhat.row(r));
      bp->grad.row(0) += g.row(r);
    }
  };
  return id;
}

int Tape::cross_entropy_logits(int logits, int gold) {
  const Mat& z = value(logits);
  if (z.rows() != 1) throw ShapeError("cross_entropy_logits expects 1 x C logits");
  if (gold < 0 || gold >= z.cols()) throw ValueError("gold class out of range");
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  Mat out(1, 1);
  out(0, 0) = lse - z(0, gold);
  const int id = push(std::move(out));
  nodes_[id].back = [id, logits, gold](Tape& t) {
    const Mat& z = t.value(logits);
    const double mx = z.maxCoeff();
    Eigen::RowVectorXd p = (z.array() - mx).exp();
    p /= p.sum();
    p(gold) -= 1.0;
    t.grad_mut(logits) += t.grad(id)(0, 0) * p;
  };
  return id;
}

}  // namespace smra::ad
