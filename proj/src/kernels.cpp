#include "gpssm/kernels.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "gpssm/csv.hpp"
#include "gpssm/error.hpp"

namespace gpssm {

struct Kernel::Node {
  KernelKind kind;
  double a = 0.0;  // rbf/exp theta, periodic theta1
  double b = 0.0;  // periodic theta2
  std::shared_ptr<const Node> left;
  std::shared_ptr<const Node> right;
};

namespace {

using NodePtr = std::shared_ptr<const Kernel::Node>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidArgument(std::string(what) + " must be positive and finite");
}

NodePtr make_base(KernelKind kind, double a = 0.0, double b = 0.0) {
  switch (kind) {
    case KernelKind::Rbf: require_positive(a, "rbf length scale"); break;
    case KernelKind::Exponential: require_positive(a, "exp length scale"); break;
    case KernelKind::Periodic:
      if (!std::isfinite(a)) throw InvalidArgument("periodic theta1 must be finite");
      require_positive(b, "periodic theta2");
      break;
    default: break;
  }
  return std::make_shared<const Kernel::Node>(Kernel::Node{kind, a, b, nullptr, nullptr});
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double l1_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s;
}

double eval_node(const Kernel::Node& n, std::span<const double> x, std::span<const double> y) {
  switch (n.kind) {
    case KernelKind::Linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    }
    case KernelKind::Rbf: return std::exp(-squared_distance(x, y) / n.a);
    case KernelKind::Exponential: return std::exp(-l1_distance(x, y) / n.a);
    case KernelKind::Periodic: return std::exp(n.a * std::cos(squared_distance(x, y) / n.b));
    case KernelKind::Sum: return eval_node(*n.left, x, y) + eval_node(*n.right, x, y);
    case KernelKind::Product: return eval_node(*n.left, x, y) * eval_node(*n.right, x, y);
  }
  return 0.0;
}

template <class Visit>
void for_each_base(const Kernel::Node& n, Visit&& visit) {
  if (n.kind == KernelKind::Sum || n.kind == KernelKind::Product) {
    for_each_base(*n.left, visit);
    for_each_base(*n.right, visit);
  } else {
    visit(n);
  }
}

NodePtr rebuild(const Kernel::Node& n, std::span<const double> values, std::size_t& pos) {
  auto take = [&] {
    if (pos >= values.size()) throw InvalidArgument("kernel: too few hyperparameters");
    return values[pos++];
  };
  switch (n.kind) {
    case KernelKind::Linear: return make_base(KernelKind::Linear);
    case KernelKind::Rbf: return make_base(KernelKind::Rbf, take());
    case KernelKind::Exponential: return make_base(KernelKind::Exponential, take());
    case KernelKind::Periodic: {
      const double t1 = take();
      const double t2 = take();
      return make_base(KernelKind::Periodic, t1, t2);
    }
    default: {
      auto l = rebuild(*n.left, values, pos);
      auto r = rebuild(*n.right, values, pos);
      return std::make_shared<const Kernel::Node>(Kernel::Node{n.kind, 0, 0, l, r});
    }
  }
}

std::string node_string(const Kernel::Node& n) {
  switch (n.kind) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Rbf: return "rbf(" + format_number(n.a) + ")";
    case KernelKind::Exponential: return "exp(" + format_number(n.a) + ")";
    case KernelKind::Periodic:
      return "periodic(" + format_number(n.a) + "," + format_number(n.b) + ")";
    case KernelKind::Sum: {
      std::string r = node_string(*n.right);
      if (n.right->kind == KernelKind::Sum) r = "(" + r + ")";
      return node_string(*n.left) + " + " + r;
    }
    case KernelKind::Product: {
      auto wrap = [](const Kernel::Node& c, bool right) {
        std::string s = node_string(c);
        if (c.kind == KernelKind::Sum || (right && c.kind == KernelKind::Product))
          s = "(" + s + ")";
        return s;
      };
      return wrap(*n.left, false) + " * " + wrap(*n.right, true);
    }
  }
  return {};
}

// Recursive-descent parser for the kernel grammar.
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  NodePtr expr() {
    NodePtr lhs = term();
    while (consume('+')) {
      NodePtr rhs = term();
      lhs = std::make_shared<const Kernel::Node>(Kernel::Node{KernelKind::Sum, 0, 0, lhs, rhs});
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = factor();
    while (consume('*')) {
      NodePtr rhs = factor();
      lhs = std::make_shared<const Kernel::Node>(
          Kernel::Node{KernelKind::Product, 0, 0, lhs, rhs});
    }
    return lhs;
  }

  NodePtr factor() {
    if (consume('(')) {
      NodePtr n = expr();
      expect(')');
      return n;
    }
    const std::string name = identifier();
    try {
      if (name == "linear") return make_base(KernelKind::Linear);
      if (name == "rbf") return make_base(KernelKind::Rbf, args(1)[0]);
      if (name == "exp") return make_base(KernelKind::Exponential, args(1)[0]);
      if (name == "periodic") {
        auto a = args(2);
        return make_base(KernelKind::Periodic, a[0], a[1]);
      }
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
    fail(name.empty() ? "expected a kernel name" : "unknown kernel '" + name + "'");
  }

  std::vector<double> args(std::size_t count) {
    expect('(');
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) {
      if (i > 0) expect(',');
      out.push_back(number());
    }
    expect(')');
    return out;
  }

  double number() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '+') ++pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  std::string identifier() {
    skip_ws();
    std::string s;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_])))
      s += text_[pos_++];
    return s;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("kernel expression '" + std::string(text_) + "' at offset " +
                          std::to_string(pos_) + ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Kernel Kernel::linear() { return Kernel(make_base(KernelKind::Linear)); }
Kernel Kernel::rbf(double theta) { return Kernel(make_base(KernelKind::Rbf, theta)); }
Kernel Kernel::exponential(double theta) {
  return Kernel(make_base(KernelKind::Exponential, theta));
}
Kernel Kernel::periodic(double theta1, double theta2) {
  return Kernel(make_base(KernelKind::Periodic, theta1, theta2));
}

Kernel Kernel::parse(std::string_view text) { return Kernel(Parser(text).parse()); }

Kernel operator+(const Kernel& a, const Kernel& b) {
  return Kernel(std::make_shared<const Kernel::Node>(
      Kernel::Node{KernelKind::Sum, 0, 0, a.root_, b.root_}));
}

Kernel operator*(const Kernel& a, const Kernel& b) {
  return Kernel(std::make_shared<const Kernel::Node>(
      Kernel::Node{KernelKind::Product, 0, 0, a.root_, b.root_}));
}

double Kernel::operator()(std::span<const double> x, std::span<const double> y) const {
  return eval_node(*root_, x, y);
}

KernelKind Kernel::kind() const { return root_->kind; }

std::string Kernel::to_string() const { return node_string(*root_); }

bool Kernel::is_psd() const {
  bool psd = true;
  for_each_base(*root_, [&](const Node& n) {
    if (n.kind == KernelKind::Periodic) psd = false;
  });
  return psd;
}

std::vector<double> Kernel::params() const {
  std::vector<double> out;
  for_each_base(*root_, [&](const Node& n) {
    if (n.kind == KernelKind::Rbf || n.kind == KernelKind::Exponential) out.push_back(n.a);
    if (n.kind == KernelKind::Periodic) {
      out.push_back(n.a);
      out.push_back(n.b);
    }
  });
  return out;
}

std::vector<std::string> Kernel::param_names() const {
  std::vector<std::string> out;
  int index = 0;
  for_each_base(*root_, [&](const Node& n) {
    const std::string suffix = "[" + std::to_string(index) + "]";
    if (n.kind == KernelKind::Rbf) out.push_back("rbf" + suffix + ".theta");
    if (n.kind == KernelKind::Exponential) out.push_back("exp" + suffix + ".theta");
    if (n.kind == KernelKind::Periodic) {
      out.push_back("periodic" + suffix + ".theta1");
      out.push_back("periodic" + suffix + ".theta2");
    }
    ++index;
  });
  return out;
}

std::vector<ParamTransform> Kernel::param_transforms() const {
  std::vector<ParamTransform> out;
  for_each_base(*root_, [&](const Node& n) {
    if (n.kind == KernelKind::Rbf || n.kind == KernelKind::Exponential)
      out.push_back(ParamTransform::Log);
    if (n.kind == KernelKind::Periodic) {
      out.push_back(ParamTransform::Identity);
      out.push_back(ParamTransform::Log);
    }
  });
  return out;
}

std::size_t Kernel::num_params() const { return params().size(); }

Kernel Kernel::with_params(std::span<const double> values) const {
  std::size_t pos = 0;
  NodePtr root = rebuild(*root_, values, pos);
  if (pos != values.size()) throw InvalidArgument("kernel: too many hyperparameters");
  return Kernel(std::move(root));
}

double eval(const Kernel& k, std::span<const double> x, std::span<const double> x2) {
  if (x.size() != x2.size() || x.empty())
    throw InvalidArgument("kernel eval: input dimensions " + std::to_string(x.size()) +
                          " and " + std::to_string(x2.size()) + " differ");
  return k(x, x2);
}

Eigen::MatrixXd gram(const Kernel& k, const InputMatrix& X) {
  if (X.rows() == 0 || X.cols() == 0) throw InvalidArgument("gram: empty input set");
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = k(point(X, i), point(X, j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

CrossCovariance cross(const Kernel& k, const InputMatrix& X, std::span<const double> xs) {
  if (X.rows() == 0) throw InvalidArgument("cross: empty input set");
  if (static_cast<std::size_t>(X.cols()) != xs.size())
    throw InvalidArgument("cross: query dimension " + std::to_string(xs.size()) +
                          " does not match inputs of dimension " + std::to_string(X.cols()));
  CrossCovariance out;
  out.k_star.resize(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out.k_star(i) = k(point(X, i), xs);
  out.k_star_star = k(xs, xs);
  return out;
}

}  // namespace gpssm
