// SPDX-License-Identifier: Apache-2.0
#include "quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "paoi/errors.hpp"

namespace paoi::detail {

namespace {

// Kronrod nodes on [-1, 1] (nonnegative half); odd indices are Gauss nodes.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kNodes[static_cast<std::size_t>(j)];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[static_cast<std::size_t>(j)] * s;
    if (j % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(j / 2)] * s;
  }
  kronrod *= h;
  gauss *= h;
  double err = std::abs(kronrod - gauss);
  // error floor from rounding in the Kronrod sum
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(kronrod));
  return {a, b, kronrod, err};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, double rel_tol, int max_panels) {
  std::priority_queue<Panel> heap;
  Panel first = gauss_kronrod(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int panels = 1;
  auto tolerance = [&] { return std::min(abs_tol, rel_tol * std::abs(total)); };
  while (total_err > tolerance()) {
    if (panels >= max_panels) {
      throw Error(ErrorCode::kNumericalFailure,
                  "adaptive quadrature hit its subdivision cap before reaching tolerance");
    }
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gauss_kronrod(f, worst.a, mid);
    Panel right = gauss_kronrod(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // recompute the sum from the panels to shed drift from the running updates
  double sum = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {sum, err, panels};
}

}  // namespace paoi::detail
