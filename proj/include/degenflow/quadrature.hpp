#pragma once

#include <cmath>
#include <vector>

namespace degenflow::quadrature {

struct AdaptiveSimpsonOptions {
  double abs_tol = 1e-10;
  int max_intervals = 10000;
};

/// Adaptive Simpson with Richardson correction on each accepted panel.
/// Subdivision stops once max_intervals panels exist; remaining panels are
/// accepted as they stand.
template <class F>
[[nodiscard]] double adaptive_simpson(F&& f, double a, double b, AdaptiveSimpsonOptions opt = {}) {
  if (a == b) return 0.0;

  struct Panel {
    double a, b, fa, fm, fb, whole, tol;
  };

  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  auto simpson = [](double a_, double b_, double fa_, double fm_, double fb_) {
    return (b_ - a_) / 6.0 * (fa_ + 4.0 * fm_ + fb_);
  };

  std::vector<Panel> stack;
  stack.reserve(64);
  stack.push_back({a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), opt.abs_tol});
  int intervals = 1;
  double total = 0.0;

  while (!stack.empty()) {
    const Panel pan = stack.back();
    stack.pop_back();
    const double m = 0.5 * (pan.a + pan.b);
    const double flm = f(0.5 * (pan.a + m));
    const double frm = f(0.5 * (m + pan.b));
    const double left = simpson(pan.a, m, pan.fa, flm, pan.fm);
    const double right = simpson(m, pan.b, pan.fm, frm, pan.fb);
    const double diff = left + right - pan.whole;
    if (std::abs(diff) <= 15.0 * pan.tol || intervals >= opt.max_intervals) {
      total += left + right + diff / 15.0;
      continue;
    }
    ++intervals;
    stack.push_back({m, pan.b, pan.fm, frm, pan.fb, right, 0.5 * pan.tol});
    stack.push_back({pan.a, m, pan.fa, flm, pan.fm, left, 0.5 * pan.tol});
  }
  return total;
}

}  // namespace degenflow::quadrature
