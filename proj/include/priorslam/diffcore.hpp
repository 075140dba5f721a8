#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "priorslam/types.hpp"

namespace priorslam {

/// A named block of trainable scalars with its own learning rate.
struct ParamGroup {
  std::string name;
  std::vector<double> values;
  double learning_rate = 1e-3;
  bool trainable = true;
};

/// Gradient of one ParamGroup, stored densely but tracked by touched rows so
/// that clearing and Adam updates only visit the entries a batch reached.
/// Dense groups use a single row spanning the whole group.
class SparseGrad {
 public:
  SparseGrad() = default;
  SparseGrad(std::size_t size, std::size_t row_width);

  /// Grows the buffer for groups that gain entries (new voxels).
  void resize(std::size_t size);

  /// Mutable access to row r, marking it touched.
  double* row(std::size_t r) {
    if (!marked_[r]) {
      marked_[r] = 1;
      touched_.push_back(r);
    }
    return values_.data() + r * row_width_;
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::size_t row_width() const { return row_width_; }
  [[nodiscard]] std::span<const std::size_t> touched_rows() const { return touched_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  /// Zeros touched rows and forgets them.
  void clear();
  /// Adds other's touched rows into this one, in other's touch order.
  void accumulate(const SparseGrad& other);
  /// Multiplies every touched entry by s.
  void scale(double s);
  /// Throws NumericError naming `op` if a touched entry is non-finite.
  void check_finite(std::string_view op) const;

 private:
  std::size_t row_width_ = 1;
  std::vector<double> values_;
  std::vector<std::uint8_t> marked_;
  std::vector<std::size_t> touched_;
};

/// One SparseGrad per ParamGroup, in the same order.
using GradientBuffer = std::vector<SparseGrad>;

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments per parameter; one step counter per group.
struct AdamState {
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
  };
  std::vector<Moments> groups;
  AdamHyper hyper;
};

/// One Adam step with bias correction. Only touched rows of trainable groups
/// move (lazy moments); frozen groups are left bit-identical.
/// Throws InputError on a shape mismatch.
void adam_step(std::span<ParamGroup* const> params, std::span<const SparseGrad> grads, AdamState& state);

/// Scalar function that also writes its analytic gradient.
using GradientFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// max_i |g_analytic - g_fd| / max(1e-8, |g_fd|) using central differences.
double finite_difference_check(const GradientFunction& fn, std::span<const double> point, double eps = 1e-5);

/// Throws NumericError mentioning `op` when v is not finite.
inline void require_finite(double v, std::string_view op) {
  if (!std::isfinite(v)) throw NumericError("non-finite value in " + std::string(op));
}

/// Reverse-mode recorder for small scalar expressions. Nodes are appended in
/// evaluation order, so a single reverse sweep yields exact gradients.
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };

  Var leaf(double value);
  Var constant(double value) { return leaf(value); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var square(Var a) { return mul(a, a); }
  Var sum(std::span<const Var> xs);
  /// b + sum_i w_i * x_i.
  Var affine(std::span<const Var> w, std::span<const Var> x, Var b);

  [[nodiscard]] double value(Var v) const { return nodes_[v.id].value; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// d loss / d node for every node on the tape. Throws NumericError naming the
  /// op whose value or adjoint is non-finite.
  [[nodiscard]] std::vector<double> backward(Var loss) const;

 private:
  struct Node {
    double value = 0.0;
    const char* op = "leaf";
    // Up to two parents with local partials; n-ary ops are chained.
    std::size_t parent[2] = {0, 0};
    double partial[2] = {0.0, 0.0};
    int arity = 0;
  };
  Var push(const char* op, double value, int arity, std::size_t p0 = 0, double d0 = 0.0, std::size_t p1 = 0,
           double d1 = 0.0);
  std::vector<Node> nodes_;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace priorslam
