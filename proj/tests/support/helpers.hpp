#pragma once

#include <initializer_list>
#include <random>

#include "blockreach/decomposition.hpp"
#include "blockreach/geometry.hpp"

namespace th {

using namespace blockreach;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline Hyperrectangle box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  return Hyperrectangle::from_bounds(vec(lo), vec(hi));
}

inline HalfSpace hs(std::initializer_list<double> a, double b) { return {vec(a), b}; }

inline Hyperrectangle random_box(int n, std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> uc(-spread, spread), ur(0.05, spread);
  Vector c(n), r(n);
  for (int i = 0; i < n; ++i) {
    c(i) = uc(rng);
    r(i) = ur(rng);
  }
  return Hyperrectangle(c, r);
}

inline Vector random_direction(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector d(n);
  for (int i = 0; i < n; ++i) d(i) = g(rng);
  return d;
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

/// Random block sizes of 1 or 2 covering n coordinates.
inline BlockStructure random_structure(int n, int max_width, std::mt19937_64& rng) {
  std::vector<int> sizes;
  int left = n;
  while (left > 0) {
    const int w = std::min(left, 1 + static_cast<int>(rng() % static_cast<unsigned>(max_width)));
    sizes.push_back(w);
    left -= w;
  }
  return BlockStructure(sizes);
}

}  // namespace th
