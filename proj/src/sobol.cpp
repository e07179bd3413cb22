#include "pbf/sobol.hpp"

#include <stdexcept>

namespace pbf {

namespace {

constexpr int kMaxBits = 32;

struct PolyParams {
  int degree;
  std::uint32_t coeff;                 // polynomial coefficient bits (a)
  std::vector<std::uint32_t> m_init;   // initial direction integers
};

// Primitive polynomials and initial direction numbers for dimensions 2..10
// (dimension 1 is the van der Corput sequence), Joe & Kuo "new-joe-kuo-6".
const std::vector<PolyParams>& poly_table() {
  static const std::vector<PolyParams> table = {
      {1, 0, {1}},
      {2, 1, {1, 3}},
      {3, 1, {1, 3, 1}},
      {3, 2, {1, 1, 1}},
      {4, 1, {1, 1, 3, 3}},
      {4, 4, {1, 3, 5, 13}},
      {5, 2, {1, 1, 5, 5, 17}},
      {5, 4, {1, 1, 5, 5, 5}},
      {5, 7, {1, 1, 7, 11, 19}},
  };
  return table;
}

std::vector<std::uint32_t> build_directions(const PolyParams& p) {
  std::vector<std::uint32_t> v(kMaxBits);
  const int s = p.degree;
  std::vector<std::uint32_t> m = p.m_init;
  m.resize(kMaxBits);
  for (int j = s; j < kMaxBits; ++j) {
    std::uint32_t val = m[j - s] ^ (m[j - s] << s);
    for (int k = 1; k < s; ++k) {
      if ((p.coeff >> (s - 1 - k)) & 1u) val ^= m[j - k] << k;
    }
    m[j] = val;
  }
  for (int j = 0; j < kMaxBits; ++j) v[j] = m[j] << (kMaxBits - 1 - j);
  return v;
}

std::vector<std::uint32_t> van_der_corput_directions() {
  std::vector<std::uint32_t> v(kMaxBits);
  for (int j = 0; j < kMaxBits; ++j) v[j] = 1u << (kMaxBits - 1 - j);
  return v;
}

int count_trailing_ones(std::uint64_t n) {
  int c = 0;
  while (n & 1u) {
    ++c;
    n >>= 1;
  }
  return c;
}

}  // namespace

SobolSequence::SobolSequence(int dimension, std::uint64_t skip) {
  if (dimension < 1 || dimension > static_cast<int>(poly_table().size()) + 1)
    throw std::invalid_argument("SobolSequence: dimension out of supported range");
  directions_.reserve(dimension);
  directions_.push_back(van_der_corput_directions());
  for (int d = 1; d < dimension; ++d) directions_.push_back(build_directions(poly_table()[d - 1]));
  state_.assign(dimension, 0u);
  for (std::uint64_t i = 0; i < skip; ++i) advance();
}

void SobolSequence::advance() {
  // Gray-code step: point n+1 flips direction number ctz(n+1), with n+1
  // counted from 1 (index_ holds n).
  int bit = count_trailing_ones(index_);
  if (bit >= kMaxBits) throw std::runtime_error("SobolSequence exhausted (2^32 points)");
  for (std::size_t d = 0; d < state_.size(); ++d) state_[d] ^= directions_[d][bit];
  ++index_;
}

Eigen::VectorXd SobolSequence::next() {
  advance();
  Eigen::VectorXd x(state_.size());
  constexpr double scale = 1.0 / 4294967296.0;  // 2^-32
  for (std::size_t d = 0; d < state_.size(); ++d) x[d] = state_[d] * scale;
  return x;
}

Eigen::MatrixXd SobolSequence::next_points(int n) {
  Eigen::MatrixXd pts(dimension(), n);
  for (int i = 0; i < n; ++i) pts.col(i) = next();
  return pts;
}

}  // namespace pbf
