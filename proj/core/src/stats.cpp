#include "lesioneval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lesioneval/error.hpp"

namespace lesioneval {

std::string_view to_string(PValueMethod m) {
  return m == PValueMethod::exact ? "exact" : "approximate";
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw InputError(fmt::format("normal_quantile: p = {} outside [0,1]", p));
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Sum over tie groups of t^3 - t.
double tie_term(std::span<const double> values) {
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  double term = 0.0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
    const auto t = static_cast<double>(j - i + 1);
    term += t * t * t - t;
    i = j + 1;
  }
  return term;
}

// Two-sided normal approximation with continuity correction.
double normal_two_sided(double statistic, double mean, double variance) {
  if (!(variance > 0.0)) return 1.0;
  const double d = std::max(0.0, std::fabs(statistic - mean) - 0.5);
  return std::min(1.0, 2.0 * normal_sf(d / std::sqrt(variance)));
}

double poly(const double* c, int nord, double x) {
  double ret = c[0];
  if (nord > 1) {
    double p = x * c[nord - 1];
    for (int j = nord - 2; j > 0; --j) p = (p + c[j]) * x;
    ret += p;
  }
  return ret;
}

}  // namespace

StatTestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw InputError(fmt::format("shapiro_wilk: n = {} outside [3, 5000]", n));
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("shapiro_wilk: non-finite value");
  }
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::fabs(x.back())))) {
    throw InputError("shapiro_wilk: zero variance (all values identical)");
  }

  static constexpr double g[2] = {-2.273, 0.459};
  static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

  const std::size_t nn2 = n / 2;
  const auto an = static_cast<double>(n);
  std::vector<double> a(nn2 + 1, 0.0);  // 1-based coefficients

  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    const double an25 = an + 0.25;
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= nn2; ++i) {
      a[i] = normal_quantile((static_cast<double>(i) - 0.375) / an25);
      summ2 += a[i] * a[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - a[1] / ssumm2;
    std::size_t i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      const double a2 = -a[2] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (std::size_t i = i1; i <= nn2; ++i) a[i] /= -fac;
  }

  // W as the squared correlation between the ordered data and the coefficients.
  auto coeff = [&](std::size_t i) {  // zero-based position in the sorted sample
    const std::size_t j = n - 1 - i;
    if (i == j) return 0.0;
    return i < j ? -a[1 + i] : a[1 + j];
  };
  double sa = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += coeff(i);
    sx += x[i] / range;
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coeff(i) - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  // 1 - W, computed to avoid cancellation for W near 1.
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  StatTestResult r;
  r.test_name = "shapiro_wilk";
  r.statistic = w;
  r.n1 = n;
  r.method = PValueMethod::approximate;

  double pw = 1.0;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6 / pi
    constexpr double stqr = 1.04719755119660;  // pi / 3
    pw = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    r.method = PValueMethod::exact;
  } else if (w1 <= 0.0) {
    pw = 1.0;
  } else {
    double y = std::log(w1);
    const double xx = std::log(an);
    double m, s;
    if (n <= 11) {
      const double gamma = poly(g, 2, an);
      if (y >= gamma) {
        pw = 1e-99;
        y = NAN;
      } else {
        y = -std::log(gamma - y);
      }
      m = poly(c3, 4, an);
      s = std::exp(poly(c4, 4, an));
    } else {
      m = poly(c5, 4, xx);
      s = std::exp(poly(c6, 3, xx));
    }
    if (!std::isnan(y)) pw = normal_sf((y - m) / s);
  }
  r.p_value = std::clamp(pw, 0.0, 1.0);
  r.p_adjusted = r.p_value;
  return r;
}

namespace {

// Null distribution of W+ for ranks 1..n: counts[s] = number of sign
// assignments with positive-rank sum s (2^n in total).
std::vector<std::uint64_t> signed_rank_counts(std::size_t n) {
  const std::size_t max_sum = n * (n + 1) / 2;
  std::vector<std::uint64_t> c(max_sum + 1, 0);
  c[0] = 1;
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t s = max_sum; s >= r; --s) c[s] += c[s - r];
  }
  return c;
}

// Null distribution of U for group sizes n1, n2: counts[u] = number of the
// C(n1+n2, n1) group assignments with that U.
std::vector<std::uint64_t> rank_sum_counts(std::size_t n1, std::size_t n2) {
  const auto k1 = static_cast<std::int64_t>(n1);
  const auto k2 = static_cast<std::int64_t>(n2);
  const std::int64_t umax = k1 * k2;
  // dp[k][u]: ways to place k group-a elements among the first m sorted
  // positions with U-contribution u. An a-element at position m preceded by
  // j b-elements contributes j.
  std::vector<std::vector<std::uint64_t>> dp(n1 + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(umax) + 1, 0));
  dp[0][0] = 1;
  for (std::int64_t m = 0; m < k1 + k2; ++m) {
    for (std::int64_t k = std::min(k1, m + 1); k >= 1; --k) {
      const std::int64_t before_b = m - (k - 1);
      if (before_b > k2) continue;
      auto& to = dp[static_cast<std::size_t>(k)];
      const auto& from = dp[static_cast<std::size_t>(k - 1)];
      for (std::int64_t u = umax; u >= before_b; --u) {
        to[static_cast<std::size_t>(u)] += from[static_cast<std::size_t>(u - before_b)];
      }
    }
  }
  return dp[n1];
}

double exact_two_sided(const std::vector<std::uint64_t>& counts, std::size_t statistic) {
  long double total = 0.0L, tail = 0.0L;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    total += static_cast<long double>(counts[s]);
    if (s <= statistic) tail += static_cast<long double>(counts[s]);
  }
  return std::min(1.0, static_cast<double>(2.0L * tail / total));
}

bool has_ties(std::span<const double> values) {
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}

}  // namespace

StatTestResult wilcoxon_signed_rank(std::span<const double> differences, std::optional<PValueMethod> method) {
  std::vector<double> d;
  for (double v : differences) {
    if (!std::isfinite(v)) throw InputError("wilcoxon_signed_rank: non-finite difference");
    if (v != 0.0) d.push_back(v);
  }
  if (d.empty()) throw InputError("wilcoxon_signed_rank: all differences are zero");
  const std::size_t n = d.size();
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::fabs(d[i]);
  const auto ranks = midranks(mags);
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0.0 ? w_plus : w_minus) += ranks[i];

  StatTestResult r;
  r.test_name = "wilcoxon_signed_rank";
  r.statistic = std::min(w_plus, w_minus);
  r.n1 = n;
  const bool exact_ok = n <= kWilcoxonExactMaxN && !has_ties(mags);
  if (method == PValueMethod::exact && !exact_ok) {
    throw InputError(fmt::format("wilcoxon_signed_rank: exact p needs n <= {} without tied |d| (n = {})",
                                 kWilcoxonExactMaxN, n));
  }
  if (method.value_or(exact_ok ? PValueMethod::exact : PValueMethod::approximate) == PValueMethod::exact) {
    r.method = PValueMethod::exact;
    r.p_value = exact_two_sided(signed_rank_counts(n), static_cast<std::size_t>(r.statistic));
  } else {
    r.method = PValueMethod::approximate;
    const auto nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term(mags) / 48.0;
    r.p_value = normal_two_sided(r.statistic, mean, var);
  }
  r.p_adjusted = r.p_value;
  return r;
}

StatTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError(fmt::format("wilcoxon_signed_rank: paired samples differ in size ({} vs {})", x.size(), y.size()));
  }
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  return wilcoxon_signed_rank(d);
}

StatTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                              std::optional<PValueMethod> method) {
  if (a.empty() || b.empty()) throw InputError("mann_whitney_u: empty group");
  std::vector<double> joint(a.begin(), a.end());
  joint.insert(joint.end(), b.begin(), b.end());
  for (double v : joint) {
    if (!std::isfinite(v)) throw InputError("mann_whitney_u: non-finite value");
  }
  const auto ranks = midranks(joint);
  const auto n1 = static_cast<double>(a.size());
  const auto n2 = static_cast<double>(b.size());
  double r1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r1 += ranks[i];
  const double u1 = r1 - n1 * (n1 + 1.0) / 2.0;
  const double u2 = n1 * n2 - u1;

  StatTestResult r;
  r.test_name = "mann_whitney_u";
  r.statistic = std::min(u1, u2);
  r.n1 = a.size();
  r.n2 = b.size();
  const bool exact_ok = joint.size() <= kMannWhitneyExactMaxN && !has_ties(joint);
  if (method == PValueMethod::exact && !exact_ok) {
    throw InputError(fmt::format("mann_whitney_u: exact p needs n1 + n2 <= {} without ties (n = {})",
                                 kMannWhitneyExactMaxN, joint.size()));
  }
  if (method.value_or(exact_ok ? PValueMethod::exact : PValueMethod::approximate) == PValueMethod::exact) {
    r.method = PValueMethod::exact;
    r.p_value = exact_two_sided(rank_sum_counts(a.size(), b.size()), static_cast<std::size_t>(r.statistic));
  } else {
    r.method = PValueMethod::approximate;
    const double n = n1 + n2;
    const double mean = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term(joint) / (n * (n - 1.0)));
    r.p_value = normal_two_sided(r.statistic, mean, var);
  }
  r.p_adjusted = r.p_value;
  return r;
}

std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m) {
  if (m == 0 || m < p_values.size()) {
    throw InputError(fmt::format("bonferroni: family size m = {} smaller than {} p-values", m, p_values.size()));
  }
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("bonferroni: p = {} outside [0,1]", p));
    out.push_back(std::min(1.0, static_cast<double>(m) * p));
  }
  return out;
}

void apply_bonferroni(std::span<StatTestResult> results, std::size_t m) {
  std::vector<double> p;
  p.reserve(results.size());
  for (const auto& r : results) p.push_back(r.p_value);
  const auto adj = bonferroni(p, m);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].p_adjusted = adj[i];
}

std::string_view significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "n.s.";
}

void to_json(nlohmann::json& j, const StatTestResult& r) {
  j = nlohmann::json{{"test", r.test_name},
                     {"statistic", r.statistic},
                     {"p", r.p_value},
                     {"p_adj", r.p_adjusted},
                     {"method", std::string(to_string(r.method))}};
  if (r.n2 == 0) {
    j["n"] = r.n1;
  } else {
    j["n"] = r.n1 + r.n2;
    j["n1"] = r.n1;
    j["n2"] = r.n2;
  }
}

}  // namespace lesioneval
