#pragma once

#include "aspca/random.hpp"
#include "aspca/types.hpp"

#include <Eigen/QR>

namespace aspca::test {

inline Matrix random_frame(int N, int M, Rng& rng) {
  Matrix g(N, M);
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < N; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(N, M);
}

inline Matrix random_symmetric(int T, Rng& rng) {
  Matrix a(T, T);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
  return a;
}

inline Vector unit(int N, int k) {
  Vector v = Vector::Zero(N);
  v(k) = 1.0;
  return v;
}

}  // namespace aspca::test
