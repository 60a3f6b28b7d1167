#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace lesioneval {

enum class PValueMethod { exact, approximate };

std::string_view to_string(PValueMethod m);

struct StatTestResult {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;  ///< equals p_value until a correction is applied
  std::size_t n1 = 0;       ///< sample size (first group for two-sample tests)
  std::size_t n2 = 0;       ///< second group size; 0 for one-sample tests
  PValueMethod method = PValueMethod::approximate;
};

/// Largest sample sizes for exhaustive null distributions.
inline constexpr std::size_t kWilcoxonExactMaxN = 25;
inline constexpr std::size_t kMannWhitneyExactMaxN = 20;

/// Shapiro–Wilk W and p via Royston's AS R94 (3 <= n <= 5000).
StatTestResult shapiro_wilk(std::span<const double> x);

/// Two-sided Wilcoxon signed-rank test on paired differences. Zeros are
/// dropped; W = min(W+, W-). Exact when n <= 25 without tied |d|, else normal
/// approximation with tie and continuity correction. `method` forces one
/// regime; exact requires the conditions above.
StatTestResult wilcoxon_signed_rank(std::span<const double> differences,
                                    std::optional<PValueMethod> method = std::nullopt);

/// Convenience overload on paired samples: differences x[i] - y[i].
StatTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

/// Two-sided Mann–Whitney U test; U = min(U1, U2) from joint mid-ranks.
/// Exact when n1 + n2 <= 20 without ties, else normal approximation with tie
/// and continuity correction. `method` forces one regime as above.
StatTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                              std::optional<PValueMethod> method = std::nullopt);

/// Each p -> min(1, m * p). Requires m >= p.size() and p in [0, 1].
std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m);

/// Fills p_adjusted of every result with family size m.
void apply_bonferroni(std::span<StatTestResult> results, std::size_t m);

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, otherwise "n.s.".
std::string_view significance_stars(double p_adjusted);

/// Mid-ranks (1-based; tied values share the mean of their positions).
std::vector<double> midranks(std::span<const double> values);

/// Standard-normal quantile (Wichura AS 241, ~1e-16 relative accuracy).
double normal_quantile(double p);
/// Upper tail 1 - Phi(z).
double normal_sf(double z);

void to_json(nlohmann::json& j, const StatTestResult& r);

}  // namespace lesioneval
