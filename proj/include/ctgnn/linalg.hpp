#pragma once

// Small dense helpers used by the model and engines. Everything is row-major
// double precision; matrices stay tiny (layer widths), so plain loops are
// plenty.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace ctgnn {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
};

inline double dot(const double* x, const double* y, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += x[i] * y[i];
  return s;
}

// y = W x
inline void gemv(const Mat& w, const double* x, double* y) {
  for (int i = 0; i < w.rows; ++i) y[i] = dot(w.row(i), x, w.cols);
}

// x += W^T y
inline void gemv_t_add(const Mat& w, const double* y, double* x) {
  for (int i = 0; i < w.rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    const double* wr = w.row(i);
    for (int j = 0; j < w.cols; ++j) x[j] += wr[j] * yi;
  }
}

// G += y x^T, G stored row-major rows x cols.
inline void outer_add(double* g, const double* y, int rows, const double* x, int cols) {
  for (int i = 0; i < rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) {
      g += cols;
      continue;
    }
    for (int j = 0; j < cols; ++j) g[j] += yi * x[j];
    g += cols;
  }
}

inline void axpy(double a, const double* x, double* y, int d) {
  for (int i = 0; i < d; ++i) y[i] += a * x[i];
}

inline double norm2(const double* x, int d) { return std::sqrt(dot(x, x, d)); }

inline double norm2(const Vec& x) { return norm2(x.data(), static_cast<int>(x.size())); }

inline double norm2_diff(const double* x, const double* y, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double t = x[i] - y[i];
    s += t * t;
  }
  return std::sqrt(s);
}

inline double norm2_diff(const Vec& x, const Vec& y) {
  return norm2_diff(x.data(), y.data(), static_cast<int>(x.size()));
}

// Shortest decimal form that round-trips a double (used by every text
// emitter so files are reproducible bit for bit).
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace ctgnn
