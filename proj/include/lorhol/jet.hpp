#pragma once

// Forward-mode jets over at most kMaxDim variables.
//
// Jet1 carries value and gradient; Jet2 adds the Hessian, stored as the upper
// triangle so symmetry holds exactly. Both are plain value types with fixed
// capacity so evaluation never allocates.

#include <array>
#include <cstddef>

namespace lorhol {

inline constexpr int kMaxDim = 6;

struct Jet1 {
  int n = 0;
  double value = 0.0;
  std::array<double, kMaxDim> grad{};

  static Jet1 constant(double c, int n) {
    Jet1 j;
    j.n = n;
    j.value = c;
    return j;
  }
  static Jet1 variable(double x, int index, int n) {
    Jet1 j = constant(x, n);
    j.grad[static_cast<std::size_t>(index)] = 1.0;
    return j;
  }
};

struct Jet2 {
  static constexpr int kTriangle = kMaxDim * (kMaxDim + 1) / 2;

  int n = 0;
  double value = 0.0;
  std::array<double, kMaxDim> grad{};
  std::array<double, kTriangle> hess_upper{};

  static constexpr std::size_t tri(int i, int j) {
    if (i > j) {
      const int t = i;
      i = j;
      j = t;
    }
    return static_cast<std::size_t>(i * (2 * kMaxDim - i - 1) / 2 + j);
  }

  double hess(int i, int j) const { return hess_upper[tri(i, j)]; }
  double& hess(int i, int j) { return hess_upper[tri(i, j)]; }

  static Jet2 constant(double c, int n) {
    Jet2 j;
    j.n = n;
    j.value = c;
    return j;
  }
  static Jet2 variable(double x, int index, int n) {
    Jet2 j = constant(x, n);
    j.grad[static_cast<std::size_t>(index)] = 1.0;
    return j;
  }
};

// Scalar arithmetic shared by the three evaluation types. `chain` applies a
// univariate function given its value and first two derivatives at a.value.

inline double chain(double /*a*/, double f0, double /*f1*/, double /*f2*/) { return f0; }

inline Jet1 chain(const Jet1& a, double f0, double f1, double /*f2*/) {
  Jet1 r;
  r.n = a.n;
  r.value = f0;
  for (int i = 0; i < a.n; ++i) r.grad[i] = f1 * a.grad[i];
  return r;
}

inline Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r;
  r.n = a.n;
  r.value = f0;
  for (int i = 0; i < a.n; ++i) r.grad[i] = f1 * a.grad[i];
  for (int i = 0; i < a.n; ++i)
    for (int j = i; j < a.n; ++j)
      r.hess(i, j) = f1 * a.hess(i, j) + f2 * a.grad[i] * a.grad[j];
  return r;
}

inline double value_of(double a) { return a; }
inline double value_of(const Jet1& a) { return a.value; }
inline double value_of(const Jet2& a) { return a.value; }

inline Jet1 operator+(const Jet1& a, const Jet1& b) {
  Jet1 r = a;
  r.value += b.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] += b.grad[i];
  return r;
}
inline Jet1 operator-(const Jet1& a, const Jet1& b) {
  Jet1 r = a;
  r.value -= b.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] -= b.grad[i];
  return r;
}
inline Jet1 operator-(const Jet1& a) {
  Jet1 r = a;
  r.value = -r.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] = -r.grad[i];
  return r;
}
inline Jet1 operator*(const Jet1& a, const Jet1& b) {
  Jet1 r;
  r.n = a.n;
  r.value = a.value * b.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
  return r;
}

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.value += b.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] += b.grad[i];
  for (std::size_t k = 0; k < r.hess_upper.size(); ++k) r.hess_upper[k] += b.hess_upper[k];
  return r;
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.value -= b.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] -= b.grad[i];
  for (std::size_t k = 0; k < r.hess_upper.size(); ++k) r.hess_upper[k] -= b.hess_upper[k];
  return r;
}
inline Jet2 operator-(const Jet2& a) {
  Jet2 r = a;
  r.value = -r.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] = -r.grad[i];
  for (auto& h : r.hess_upper) h = -h;
  return r;
}
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.n = a.n;
  r.value = a.value * b.value;
  for (int i = 0; i < a.n; ++i) r.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
  for (int i = 0; i < a.n; ++i)
    for (int j = i; j < a.n; ++j)
      r.hess(i, j) = a.value * b.hess(i, j) + b.value * a.hess(i, j) +
                     a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i];
  return r;
}

}  // namespace lorhol
