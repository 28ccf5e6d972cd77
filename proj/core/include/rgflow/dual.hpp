#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rg {

// Second-order forward jet in the four kernel variables (X0, X1, X2, X3).
// Carries value, gradient and the symmetric Hessian (upper triangle, packed).
// Used to extract exact Taylor-2 data of kernel assemblies at a point, which
// kills the catastrophic cancellation a finite-difference extraction of the
// per-scale mass increments would suffer from.
struct Jet2 {
  static constexpr int kVars = 4;
  static constexpr int kHess = 10;

  double v = 0.0;
  std::array<double, kVars> g{};
  std::array<double, kHess> h{};

  Jet2() = default;
  explicit Jet2(double value) : v(value) {}

  // Packed index of (i,j), i<=j, row-major upper triangle.
  static constexpr int hidx(int i, int j) {
    return (i <= j) ? i * (2 * kVars - i - 1) / 2 + j
                    : j * (2 * kVars - j - 1) / 2 + i;
  }

  // Independent variable with seed dx_i/dt = scale (chain-rule seeding for
  // evaluating f(rho*X) as a jet in X).
  static Jet2 var(double value, int i, double scale = 1.0) {
    Jet2 j(value);
    j.g[static_cast<std::size_t>(i)] = scale;
    return j;
  }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    for (int i = 0; i < kVars; ++i) g[i] += o.g[i];
    for (int i = 0; i < kHess; ++i) h[i] += o.h[i];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    for (int i = 0; i < kVars; ++i) g[i] -= o.g[i];
    for (int i = 0; i < kHess; ++i) h[i] -= o.h[i];
    return *this;
  }
  Jet2& operator*=(double s) {
    v *= s;
    for (int i = 0; i < kVars; ++i) g[i] *= s;
    for (int i = 0; i < kHess; ++i) h[i] *= s;
    return *this;
  }
  Jet2& operator+=(double s) {
    v += s;
    return *this;
  }
  Jet2& operator-=(double s) {
    v -= s;
    return *this;
  }
};

inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator+(Jet2 a, double s) { return a += s; }
inline Jet2 operator+(double s, Jet2 a) { return a += s; }
inline Jet2 operator-(Jet2 a, double s) { return a -= s; }
inline Jet2 operator-(double s, const Jet2& a) {
  Jet2 r(a);
  r *= -1.0;
  r += s;
  return r;
}
inline Jet2 operator-(const Jet2& a) {
  Jet2 r(a);
  r *= -1.0;
  return r;
}
inline Jet2 operator*(Jet2 a, double s) { return a *= s; }
inline Jet2 operator*(double s, Jet2 a) { return a *= s; }
inline Jet2 operator/(Jet2 a, double s) { return a *= (1.0 / s); }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  for (int i = 0; i < Jet2::kVars; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  int p = 0;
  for (int i = 0; i < Jet2::kVars; ++i)
    for (int j = i; j < Jet2::kVars; ++j, ++p)
      r.h[p] = a.v * b.h[p] + b.v * a.h[p] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
  return r;
}

// f applied to a jet given (f, f', f'') at a.v.
inline Jet2 compose(double f0, double f1, double f2, const Jet2& a) {
  Jet2 r;
  r.v = f0;
  for (int i = 0; i < Jet2::kVars; ++i) r.g[i] = f1 * a.g[i];
  int p = 0;
  for (int i = 0; i < Jet2::kVars; ++i)
    for (int j = i; j < Jet2::kVars; ++j, ++p)
      r.h[p] = f1 * a.h[p] + f2 * a.g[i] * a.g[j];
  return r;
}

inline Jet2 inv(const Jet2& a) {
  const double iv = 1.0 / a.v;
  return compose(iv, -iv * iv, 2.0 * iv * iv * iv, a);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inv(b); }
inline Jet2 operator/(double s, const Jet2& b) { return inv(b) * s; }

inline Jet2 sqr(const Jet2& a) { return a * a; }

// Scalar fallbacks so assembly templates run in plain double where jets are
// not needed (norm lattice sweeps).
inline double inv(double a) { return 1.0 / a; }
inline double sqr(double a) { return a * a; }
inline double value_of(double a) { return a; }
inline double value_of(const Jet2& a) { return a.v; }

}  // namespace rg
