#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbm {

using Task = std::uint32_t;
using Robot = std::uint32_t;
// Node index inside a robot's setup matrices: 0 is the robot's own start
// node, task t lives at node t + 1.
using Node = std::uint32_t;

inline constexpr Node kStartNode = 0;

constexpr Node node_of(Task t) noexcept { return t + 1; }

using Rng = std::mt19937_64;

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeError : std::length_error {
  using std::length_error::length_error;
};

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Per-robot square matrices over {start} ∪ tasks, stored robot-major so a
// single robot's matrix is contiguous.
class SetupTensor {
 public:
  SetupTensor() = default;
  SetupTensor(std::size_t robots, std::size_t nodes, double fill = 0.0)
      : robots_(robots), nodes_(nodes), data_(robots * nodes * nodes, fill) {}

  double& operator()(Node i, Node j, Robot r) { return data_[(r * nodes_ + i) * nodes_ + j]; }
  double operator()(Node i, Node j, Robot r) const {
    return data_[(r * nodes_ + i) * nodes_ + j];
  }

  std::size_t robots() const noexcept { return robots_; }
  std::size_t nodes() const noexcept { return nodes_; }

  std::span<const double> robot_slice(Robot r) const {
    return {data_.data() + r * nodes_ * nodes_, nodes_ * nodes_};
  }
  std::span<double> robot_slice(Robot r) {
    return {data_.data() + r * nodes_ * nodes_, nodes_ * nodes_};
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const SetupTensor&) const = default;

 private:
  std::size_t robots_ = 0;
  std::size_t nodes_ = 0;
  std::vector<double> data_;
};

}  // namespace cbm
