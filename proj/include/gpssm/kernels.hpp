#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpssm {

/// Input points stored one per row (n x d), row-major so each point is a
/// contiguous span.
using InputMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> point(const InputMatrix& X, Eigen::Index i) {
  return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())};
}

enum class KernelKind { Linear, Rbf, Exponential, Periodic, Sum, Product };

/// How a hyperparameter is mapped into an unconstrained optimizer space.
enum class ParamTransform { Identity, Log };

/// Covariance function built from base kernels combined with `+` and `*`.
///
/// Base kernels, for inputs x, x' of equal dimension:
///   linear             x . x'
///   rbf(theta)         exp(-|x - x'|_2^2 / theta)
///   exp(theta)         exp(-|x - x'|_1 / theta)
///   periodic(t1, t2)   exp(t1 * cos(|x - x'|_2^2 / t2))
///
/// The periodic form uses the squared distance inside the cosine and is not
/// positive semi-definite in general; GP fitting falls back on jitter for it.
///
/// Kernels are immutable values; copies share the expression tree.
class Kernel {
 public:
  static Kernel linear();
  static Kernel rbf(double theta);
  static Kernel exponential(double theta);
  static Kernel periodic(double theta1, double theta2);

  /// Parses `linear`, `rbf(t)`, `exp(t)`, `periodic(t1,t2)` combined with
  /// `+`, `*` and parentheses; `*` binds tighter than `+`.
  static Kernel parse(std::string_view text);

  friend Kernel operator+(const Kernel& a, const Kernel& b);
  friend Kernel operator*(const Kernel& a, const Kernel& b);

  double operator()(std::span<const double> x, std::span<const double> y) const;

  KernelKind kind() const;
  /// Round-trips through parse() exactly.
  std::string to_string() const;
  /// False when the expression contains a periodic node.
  bool is_psd() const;

  /// Hyperparameters of the base nodes in left-to-right order.
  std::vector<double> params() const;
  std::vector<std::string> param_names() const;
  std::vector<ParamTransform> param_transforms() const;
  Kernel with_params(std::span<const double> values) const;
  std::size_t num_params() const;

  struct Node;

 private:
  explicit Kernel(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

/// k(x, x') for rows of input matrices; throws on dimension mismatch.
double eval(const Kernel& k, std::span<const double> x, std::span<const double> x2);

/// K[i][j] = k(X.row(i), X.row(j)); each unordered pair evaluated once.
Eigen::MatrixXd gram(const Kernel& k, const InputMatrix& X);

struct CrossCovariance {
  Eigen::VectorXd k_star;  // k(X[i], xs)
  double k_star_star;      // k(xs, xs)
};

CrossCovariance cross(const Kernel& k, const InputMatrix& X, std::span<const double> xs);

}  // namespace gpssm
