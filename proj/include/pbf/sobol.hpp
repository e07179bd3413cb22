#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace pbf {

// Gray-code Sobol sequence, up to 10 dimensions (new-joe-kuo-6 parameters).
// Index 0 (the all-zero point) is skipped: the first point drawn is the
// index-1 point (0.5, 0.5, ...). All coordinates are strictly inside (0,1).
class SobolSequence {
 public:
  explicit SobolSequence(int dimension, std::uint64_t skip = 0);

  int dimension() const { return static_cast<int>(state_.size()); }

  // next point, one coordinate per dimension
  Eigen::VectorXd next();

  // n points as columns of a (dimension x n) matrix
  Eigen::MatrixXd next_points(int n);

 private:
  void advance();

  std::vector<std::vector<std::uint32_t>> directions_;  // [dim][bit]
  std::vector<std::uint32_t> state_;
  std::uint64_t index_ = 0;  // count of generated points (post-skip of 0)
};

}  // namespace pbf
