#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semrel/tokenizer.hpp"

// Minimal reverse-mode differentiation over dense double matrices, sized for
// the toy encoder and the regression head. A Tape records one forward pass;
// backward() walks it in reverse and accumulates into Parameter::grad.
namespace semrel::autograd {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

struct Var {
  std::size_t index = 0;
};

class Tape {
 public:
  Var constant(Matrix value);
  // Reads the parameter's current value; backward() adds into its grad.
  Var parameter(Parameter& param);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  const Matrix& grad(Var v) const { return nodes_[v.index].grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // `root` must be 1x1. May be called once per tape.
  void backward(Var root);

  Var matmul(Var a, Var b);
  // a * b^T without materializing the transpose.
  Var matmul_transposed(Var a, Var b);
  Var add(Var a, Var b);
  Var subtract(Var a, Var b);
  // x (n x m) plus a 1 x m row broadcast over every row.
  Var add_row(Var x, Var row);
  Var scale(Var x, double factor);
  Var gather_rows(Var table, std::span<const TokenId> ids);
  Var slice_rows(Var x, Eigen::Index start, Eigen::Index count);
  Var slice_cols(Var x, Eigen::Index start, Eigen::Index count);
  Var concat_cols(std::span<const Var> parts);
  Var gelu(Var x);
  // Row-wise normalization with learned 1 x m gain and bias.
  Var layer_norm(Var x, Var gain, Var bias, double eps);
  // Row-wise softmax where columns with key_mask[j] == false get zero weight.
  Var masked_softmax_rows(Var scores, const std::vector<bool>& key_mask);
  Var sum_squares(Var x);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Matrix&)> backward;
    Parameter* param = nullptr;
  };

  Var push(Matrix value, std::function<void(Tape&, const Matrix&)> backward);
  void accumulate(Var v, const Matrix& delta);

  std::vector<Node> nodes_;
};

}  // namespace semrel::autograd
