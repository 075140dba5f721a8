#include "priorslam/diffcore.hpp"

#include <algorithm>
#include <cmath>

namespace priorslam {

SparseGrad::SparseGrad(std::size_t size, std::size_t row_width) : row_width_(row_width) {
  if (row_width_ == 0) row_width_ = std::max<std::size_t>(size, 1);
  resize(size);
}

void SparseGrad::resize(std::size_t size) {
  values_.resize(size, 0.0);
  marked_.resize((size + row_width_ - 1) / row_width_, 0);
}

void SparseGrad::clear() {
  for (std::size_t r : touched_) {
    const std::size_t begin = r * row_width_;
    std::fill(values_.begin() + static_cast<std::ptrdiff_t>(begin),
              values_.begin() + static_cast<std::ptrdiff_t>(std::min(begin + row_width_, values_.size())), 0.0);
    marked_[r] = 0;
  }
  touched_.clear();
}

void SparseGrad::accumulate(const SparseGrad& other) {
  if (other.row_width_ != row_width_) throw InputError("SparseGrad::accumulate: row width mismatch");
  if (other.values_.size() > values_.size()) resize(other.values_.size());
  for (std::size_t r : other.touched_) {
    double* dst = row(r);
    const double* src = other.values_.data() + r * row_width_;
    const std::size_t n = std::min(row_width_, other.values_.size() - r * row_width_);
    for (std::size_t k = 0; k < n; ++k) dst[k] += src[k];
  }
}

void SparseGrad::scale(double s) {
  for (std::size_t r : touched_) {
    for (std::size_t i = r * row_width_, end = std::min(i + row_width_, values_.size()); i < end; ++i) values_[i] *= s;
  }
}

void SparseGrad::check_finite(std::string_view op) const {
  for (std::size_t r : touched_) {
    for (std::size_t i = r * row_width_, end = std::min(i + row_width_, values_.size()); i < end; ++i) {
      require_finite(values_[i], op);
    }
  }
}

void adam_step(std::span<ParamGroup* const> params, std::span<const SparseGrad> grads, AdamState& state) {
  if (grads.size() != params.size()) throw InputError("adam_step: gradient/parameter group count mismatch");
  state.groups.resize(params.size());
  const AdamHyper& h = state.hyper;
  for (std::size_t g = 0; g < params.size(); ++g) {
    ParamGroup& group = *params[g];
    const SparseGrad& grad = grads[g];
    if (grad.size() != group.values.size()) {
      throw InputError("adam_step: shape mismatch in group '" + group.name + "'");
    }
    if (!group.trainable) continue;
    auto& mom = state.groups[g];
    mom.m.resize(group.values.size(), 0.0);
    mom.v.resize(group.values.size(), 0.0);
    ++mom.step;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(mom.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(mom.step));
    const double lr = group.learning_rate;
    const std::size_t w = grad.row_width();
    for (std::size_t r : grad.touched_rows()) {
      for (std::size_t i = r * w, end = std::min(i + w, group.values.size()); i < end; ++i) {
        const double gi = grad[i];
        mom.m[i] = h.beta1 * mom.m[i] + (1.0 - h.beta1) * gi;
        mom.v[i] = h.beta2 * mom.v[i] + (1.0 - h.beta2) * gi * gi;
        group.values[i] -= lr * (mom.m[i] / c1) / (std::sqrt(mom.v[i] / c2) + h.epsilon);
      }
    }
  }
}

double finite_difference_check(const GradientFunction& fn, std::span<const double> point, double eps) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> analytic(x.size(), 0.0), scratch(x.size(), 0.0);
  fn(x, analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + eps;
    const double fp = fn(x, scratch);
    x[i] = x0 - eps;
    const double fm = fn(x, scratch);
    x[i] = x0;
    const double fd = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1e-8, std::abs(fd)));
  }
  return worst;
}

Tape::Var Tape::push(const char* op, double value, int arity, std::size_t p0, double d0, std::size_t p1, double d1) {
  Node n;
  n.value = value;
  n.op = op;
  n.arity = arity;
  n.parent[0] = p0;
  n.parent[1] = p1;
  n.partial[0] = d0;
  n.partial[1] = d1;
  nodes_.push_back(n);
  return Var{nodes_.size() - 1};
}

Tape::Var Tape::leaf(double value) { return push("leaf", value, 0); }

Tape::Var Tape::add(Var a, Var b) { return push("add", value(a) + value(b), 2, a.id, 1.0, b.id, 1.0); }

Tape::Var Tape::sub(Var a, Var b) { return push("sub", value(a) - value(b), 2, a.id, 1.0, b.id, -1.0); }

Tape::Var Tape::mul(Var a, Var b) {
  return push("mul", value(a) * value(b), 2, a.id, value(b), b.id, value(a));
}

Tape::Var Tape::scale(Var a, double s) { return push("scale", value(a) * s, 1, a.id, s); }

Tape::Var Tape::tanh(Var a) {
  const double y = std::tanh(value(a));
  return push("tanh", y, 1, a.id, 1.0 - y * y);
}

Tape::Var Tape::sigmoid(Var a) {
  const double y = priorslam::sigmoid(value(a));
  return push("sigmoid", y, 1, a.id, y * (1.0 - y));
}

Tape::Var Tape::relu(Var a) {
  const double x = value(a);
  return push("relu", x > 0.0 ? x : 0.0, 1, a.id, x > 0.0 ? 1.0 : 0.0);
}

Tape::Var Tape::sum(std::span<const Var> xs) {
  if (xs.empty()) return constant(0.0);
  Var acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return acc;
}

Tape::Var Tape::affine(std::span<const Var> w, std::span<const Var> x, Var b) {
  if (w.size() != x.size()) throw InputError("Tape::affine: size mismatch");
  Var acc = b;
  for (std::size_t i = 0; i < w.size(); ++i) acc = add(acc, mul(w[i], x[i]));
  return acc;
}

std::vector<double> Tape::backward(Var loss) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  // Forward order so the diagnostic names the op where the value first broke.
  for (std::size_t i = 0; i <= loss.id; ++i) require_finite(nodes_[i].value, nodes_[i].op);
  adj[loss.id] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (adj[i] == 0.0) continue;
    require_finite(adj[i], n.op);
    for (int k = 0; k < n.arity; ++k) adj[n.parent[k]] += adj[i] * n.partial[k];
  }
  return adj;
}

}  // namespace priorslam
