#include "equity/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace equity::stats {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) {
    const double d = x - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(v.size() - 1);
}

// P(D >= d) for the two-sample statistic under the continuous null, by
// counting monotone lattice paths from (0,0) to (m,n) whose every vertex
// keeps |i*n - j*m| strictly below the observed numerator. Exact in integer
// arithmetic; the path counts for m + n < 50 fit comfortably in a double.
double ks_exact_p(std::size_t m, std::size_t n, std::uint64_t d_numerator) {
  std::vector<double> col(n + 1, 0.0);
  const auto inside = [&](std::uint64_t i, std::uint64_t j) {
    const std::uint64_t a = i * n;
    const std::uint64_t b = j * m;
    const std::uint64_t diff = a > b ? a - b : b - a;
    return diff < d_numerator;
  };
  col[0] = 1.0;
  for (std::uint64_t j = 1; j <= n; ++j) {
    col[j] = inside(0, j) ? col[j - 1] : 0.0;
  }
  for (std::uint64_t i = 1; i <= m; ++i) {
    std::vector<double> next(n + 1, 0.0);
    next[0] = inside(i, 0) ? col[0] : 0.0;
    for (std::uint64_t j = 1; j <= n; ++j) {
      if (inside(i, j)) {
        next[j] = next[j - 1] + col[j];
      }
    }
    col = std::move(next);
  }
  double total = 1.0;  // C(m+n, m)
  for (std::uint64_t i = 1; i <= m; ++i) {
    total = total * static_cast<double>(n + i) / static_cast<double>(i);
  }
  const double p = 1.0 - col[n] / total;
  return std::clamp(p, 0.0, 1.0);
}

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw InternalError("Welch t-test needs at least 2 values per group");
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_variance(a, ma);
  const double vb = sample_variance(b, mb);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  TTestResult r;
  if (se2 <= 0.0) {
    // Both samples constant: equal means are indistinguishable, distinct
    // means are separated with certainty.
    r.statistic = ma == mb ? 0.0 : (ma > mb ? HUGE_VAL : -HUGE_VAL);
    r.p_value = ma == mb ? 1.0 : 0.0;
    r.dof = na + nb - 2.0;
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  const double num = se2 * se2;
  const double den = (va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0);
  r.dof = num / den;
  boost::math::students_t dist(r.dof);
  r.p_value = 2.0 * boost::math::cdf(dist, -std::abs(r.statistic));
  return r;
}

KsTestResult ks_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw InternalError("KS test needs nonempty samples");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t m = sa.size();
  const std::size_t n = sb.size();
  // Walk both samples; D numerator is max |i*n - j*m| over merge points,
  // giving D = numerator / (m*n) without float accumulation.
  std::uint64_t d_num = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < m && j < n) {
    const double v = std::min(sa[i], sb[j]);
    while (i < m && sa[i] <= v) ++i;
    while (j < n && sb[j] <= v) ++j;
    const std::uint64_t hi = static_cast<std::uint64_t>(i) * n;
    const std::uint64_t hj = static_cast<std::uint64_t>(j) * m;
    d_num = std::max(d_num, hi > hj ? hi - hj : hj - hi);
  }
  KsTestResult r;
  r.statistic = static_cast<double>(d_num) / (static_cast<double>(m) * static_cast<double>(n));
  if (d_num == 0) {
    r.p_value = 1.0;
    r.exact = m + n < 50;
    return r;
  }
  if (m + n < 50) {
    r.exact = true;
    r.p_value = ks_exact_p(m, n, d_num);
  } else {
    const double en = std::sqrt(static_cast<double>(m) * static_cast<double>(n) /
                                static_cast<double>(m + n));
    r.p_value = kolmogorov_q(en * r.statistic);
  }
  return r;
}

ComparisonReport compare_groups(std::span<const double> values, std::span<const bool> mask,
                                const std::string& name_in, const std::string& name_out) {
  if (values.size() != mask.size()) {
    throw InternalError("comparison inputs differ in length");
  }
  std::vector<double> in_group;
  std::vector<double> out_group;
  for (std::size_t i = 0; i < values.size(); ++i) {
    (mask[i] ? in_group : out_group).push_back(values[i]);
  }
  if (in_group.empty() || out_group.empty()) {
    throw InputError("group comparison requires both groups nonempty");
  }
  ComparisonReport rep;
  rep.group_a = {name_in, in_group.size(), mean_of(in_group)};
  rep.group_b = {name_out, out_group.size(), mean_of(out_group)};
  if (in_group.size() < 2 || out_group.size() < 2) {
    rep.t_test_note = "t-test unavailable: a group has fewer than 2 members";
  } else {
    rep.t_test = welch_t_test(in_group, out_group);
  }
  rep.ks = ks_test(in_group, out_group);
  return rep;
}

}  // namespace equity::stats
