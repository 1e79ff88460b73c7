#include "semrel/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "semrel/error.hpp"

namespace semrel::autograd {

Var Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward), nullptr});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& delta) {
  auto& node = nodes_[v.index];
  if (node.grad.size() == 0) {
    node.grad = delta;
  } else {
    node.grad += delta;
  }
}

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::parameter(Parameter& param) {
  Var v = push(param.value, nullptr);
  nodes_[v.index].param = &param;
  return v;
}

void Tape::backward(Var root) {
  if (nodes_[root.index].value.size() != 1) {
    throw InvalidArgument("backward() needs a scalar root");
  }
  nodes_[root.index].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0) continue;
    if (node.param != nullptr) node.param->grad += node.grad;
    if (node.backward) {
      // The closure may push into nodes_ only through accumulate(), which
      // never reallocates, so the reference stays valid.
      node.backward(*this, node.grad);
    }
  }
}

Var Tape::matmul(Var a, Var b) {
  return push(value(a) * value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::matmul_transposed(Var a, Var b) {
  return push(value(a) * value(b).transpose(), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * t.value(b));
    t.accumulate(b, g.transpose() * t.value(a));
  });
}

Var Tape::add(Var a, Var b) {
  return push(value(a) + value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::subtract(Var a, Var b) {
  return push(value(a) - value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var Tape::add_row(Var x, Var row) {
  Matrix out = value(x);
  out.rowwise() += value(row).row(0);
  return push(std::move(out), [x, row](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::scale(Var x, double factor) {
  return push(value(x) * factor,
              [x, factor](Tape& t, const Matrix& g) { t.accumulate(x, g * factor); });
}

Var Tape::gather_rows(Var table, std::span<const TokenId> ids) {
  const Matrix& tab = value(table);
  Matrix out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) {
      throw InvalidArgument("token id " + std::to_string(ids[i]) + " outside embedding table");
    }
    out.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]);
  }
  std::vector<TokenId> rows(ids.begin(), ids.end());
  return push(std::move(out), [table, rows = std::move(rows)](Tape& t, const Matrix& g) {
    Matrix delta = Matrix::Zero(t.value(table).rows(), t.value(table).cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      delta.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
    }
    t.accumulate(table, delta);
  });
}

Var Tape::slice_rows(Var x, Eigen::Index start, Eigen::Index count) {
  return push(value(x).middleRows(start, count), [x, start, count](Tape& t, const Matrix& g) {
    Matrix delta = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
    delta.middleRows(start, count) = g;
    t.accumulate(x, delta);
  });
}

Var Tape::slice_cols(Var x, Eigen::Index start, Eigen::Index count) {
  return push(value(x).middleCols(start, count), [x, start, count](Tape& t, const Matrix& g) {
    Matrix delta = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
    delta.middleCols(start, count) = g;
    t.accumulate(x, delta);
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  Eigen::Index cols = 0;
  const Eigen::Index rows = value(parts.front()).rows();
  for (const Var p : parts) cols += value(p).cols();
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var p : parts) {
    out.middleCols(offset, value(p).cols()) = value(p);
    offset += value(p).cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), [inputs = std::move(inputs)](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var p : inputs) {
      const auto c = t.value(p).cols();
      t.accumulate(p, g.middleCols(off, c));
      off += c;
    }
  });
}

Var Tape::gelu(Var x) {
  const Matrix& in = value(x);
  const Matrix out = in.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); });
  return push(out, [x](Tape& t, const Matrix& g) {
    const Matrix d = t.value(x).unaryExpr([](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + v * pdf;
    });
    t.accumulate(x, g.cwiseProduct(d));
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& in = value(x);
  const auto rows = in.rows();
  const auto cols = in.cols();
  Matrix normalized(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (in.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = normalized.array().rowwise() * value(gain).row(0).array();
  out.rowwise() += value(bias).row(0);
  return push(std::move(out), [x, gain, bias, normalized, inv_std](Tape& t, const Matrix& g) {
    t.accumulate(gain, g.cwiseProduct(normalized).colwise().sum());
    t.accumulate(bias, g.colwise().sum());
    const Matrix dn = g.array().rowwise() * t.value(gain).row(0).array();
    Matrix dx(dn.rows(), dn.cols());
    for (Eigen::Index r = 0; r < dn.rows(); ++r) {
      const double mean_dn = dn.row(r).mean();
      const double mean_dn_n = dn.row(r).cwiseProduct(normalized.row(r)).mean();
      dx.row(r) = inv_std(r) * (dn.row(r).array() - mean_dn -
                                normalized.row(r).array() * mean_dn_n);
    }
    t.accumulate(x, dx);
  });
}

Var Tape::masked_softmax_rows(Var scores, const std::vector<bool>& key_mask) {
  const Matrix& s = value(scores);
  if (static_cast<Eigen::Index>(key_mask.size()) != s.cols()) {
    throw InvalidArgument("key mask length does not match score columns");
  }
  Matrix p = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (key_mask[static_cast<std::size_t>(c)]) max_v = std::max(max_v, s(r, c));
    }
    if (!std::isfinite(max_v)) continue;
    double total = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (!key_mask[static_cast<std::size_t>(c)]) continue;
      p(r, c) = std::exp(s(r, c) - max_v);
      total += p(r, c);
    }
    p.row(r) /= total;
  }
  return push(p, [scores, p](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
    Matrix ds = p.cwiseProduct(g);
    ds -= p.cwiseProduct(dot.replicate(1, p.cols()));
    t.accumulate(scores, ds);
  });
}

Var Tape::sum_squares(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).squaredNorm();
  return push(std::move(out), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, 2.0 * g(0, 0) * t.value(x));
  });
}

}  // namespace semrel::autograd
