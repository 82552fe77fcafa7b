#pragma once

#include <array>
#include <cmath>

namespace hkflow {

/// Forward-mode dual number with N derivative slots.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  /* implicit */ Dual(double value) : v(value) {}
  Dual(double value, const std::array<double, N>& deriv) : v(value), d(deriv) {}

  static Dual seeded(double value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
};

template <int N>
Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r(-a.v);
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}

template <int N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) {
  return a += b;
}

template <int N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) {
  return a -= b;
}

template <int N>
Dual<N> operator+(Dual<N> a, double b) {
  a.v += b;
  return a;
}

template <int N>
Dual<N> operator+(double b, Dual<N> a) {
  a.v += b;
  return a;
}

template <int N>
Dual<N> operator-(Dual<N> a, double b) {
  a.v -= b;
  return a;
}

template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}

template <int N>
Dual<N> operator*(const Dual<N>& a, double s) {
  Dual<N> r(a.v * s);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * s;
  return r;
}

template <int N>
Dual<N> operator*(double s, const Dual<N>& a) {
  return a * s;
}

template <int N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  const double inv = 1.0 / b.v;
  Dual<N> r(a.v * inv);
  for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}

template <int N>
Dual<N> operator/(const Dual<N>& a, double s) {
  return a * (1.0 / s);
}

template <int N>
Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  Dual<N> r(s);
  const double f = 0.5 / s;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * f;
  return r;
}

template <int N>
Dual<N> pow(const Dual<N>& a, double e) {
  const double p = std::pow(a.v, e);
  Dual<N> r(p);
  const double f = e * p / a.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * f;
  return r;
}

inline double value_of(double x) { return x; }

template <int N>
double value_of(const Dual<N>& x) {
  return x.v;
}

}  // namespace hkflow
