#pragma once

#include <complex>
#include <compare>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ultrametric {

using Complex = std::complex<double>;

/// Function on the leaves of a ball tree, in canonical (depth-first) leaf order.
using LeafFunction = Eigen::VectorXcd;
using RealLeafFunction = Eigen::VectorXd;

/// Position of a ball in the tree's preorder numbering. The root is always 0.
struct BallIndex {
  std::size_t value = 0;

  friend constexpr auto operator<=>(BallIndex, BallIndex) = default;
};

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tree specification violated one or more ball-tree invariants.
class TreeValidationError : public Error {
 public:
  explicit TreeValidationError(std::vector<std::string> diagnostics);

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// An input does not satisfy a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnknownBallError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ultrametric

template <>
struct std::hash<ultrametric::BallIndex> {
  std::size_t operator()(ultrametric::BallIndex b) const noexcept {
    return std::hash<std::size_t>{}(b.value);
  }
};
