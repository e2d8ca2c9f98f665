#pragma once

#include <cmath>

#include "magmove/common.hpp"

// Tiny dense d x d helpers (d = 2 or 3), row-major storage on raw pointers.
// The cofactor convention is chosen so that d(det F) = cof F : dF and
// cof F = det F * F^{-T}.

namespace magmove {

inline double mdet(const double* F, int d) {
  if (d == 2) return F[0] * F[3] - F[1] * F[2];
  return F[0] * (F[4] * F[8] - F[5] * F[7]) - F[1] * (F[3] * F[8] - F[5] * F[6]) +
         F[2] * (F[3] * F[7] - F[4] * F[6]);
}

inline void mcof(const double* F, int d, double* C) {
  if (d == 2) {
    C[0] = F[3];
    C[1] = -F[2];
    C[2] = -F[1];
    C[3] = F[0];
    return;
  }
  C[0] = F[4] * F[8] - F[5] * F[7];
  C[1] = -(F[3] * F[8] - F[5] * F[6]);
  C[2] = F[3] * F[7] - F[4] * F[6];
  C[3] = -(F[1] * F[8] - F[2] * F[7]);
  C[4] = F[0] * F[8] - F[2] * F[6];
  C[5] = -(F[0] * F[7] - F[1] * F[6]);
  C[6] = F[1] * F[5] - F[2] * F[4];
  C[7] = -(F[0] * F[5] - F[2] * F[3]);
  C[8] = F[0] * F[4] - F[1] * F[3];
}

inline void minv(const double* F, int d, double* out) {
  double det = mdet(F, d);
  if (det == 0.0) throw ContractError("singular matrix inversion");
  double C[9];
  mcof(F, d, C);
  // F^{-1} = cof(F)^T / det
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i * d + j] = C[j * d + i] / det;
}

inline void mmul(const double* A, const double* B, int d, double* C) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += A[i * d + k] * B[k * d + j];
      C[i * d + j] = s;
    }
}

inline void mvec(const double* A, const double* x, int d, double* y) {
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += A[i * d + k] * x[k];
    y[i] = s;
  }
}

inline void mtvec(const double* A, const double* x, int d, double* y) {
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += A[k * d + i] * x[k];
    y[i] = s;
  }
}

inline void mtrans(const double* A, int d, double* At) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) At[i * d + j] = A[j * d + i];
}

inline double vdot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double vnorm(const double* a, int n) { return std::sqrt(vdot(a, a, n)); }

}  // namespace magmove
