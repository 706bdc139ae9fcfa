#pragma once

#include <vector>

#include "cdnmarket/market_config.hpp"

namespace cdnmarket {

enum class OptionKind { call, put };
enum class ExerciseStyle { european, american };

struct OptionParams {
  double spot = 0.0;
  double strike = 0.0;
  double rate = 0.0;           // annual, continuously compounded
  double dividend_yield = 0.0; // continuous
  double volatility = 0.0;     // annualized
  double maturity = 0.0;       // years
  OptionKind kind = OptionKind::call;
  ExerciseStyle style = ExerciseStyle::european;

  void validate() const; // throws std::invalid_argument on T <= 0, sigma <= 0, spot/strike <= 0
};

enum class LatticeBranching { binomial, trinomial };

struct LatticeSpec {
  int steps = 0;
  LatticeBranching branching = LatticeBranching::binomial;
};

double norm_cdf(double x);

// Closed form with continuous dividend yield. Rejects american style.
double bs_european(const OptionParams& p);

// Quadratic approximation of the American early-exercise premium. The
// critical-price root is found by bisection-safeguarded Newton iteration;
// throws std::runtime_error if it fails to converge within the cap.
double baw_american(const OptionParams& p);

// Recombining lattice, backward induction. Binomial: u = exp(sigma sqrt(dt)),
// d = 1/u. Trinomial: stretched moves with lambda = sqrt(3). Throws
// std::invalid_argument when the branch probabilities leave [0, 1] (step
// count too small for the drift).
double lattice_price(const OptionParams& p, const LatticeSpec& spec);

enum class StrikeRule { normal, low_penalty };
enum class PricingMethod { bs, baw, binomial, trinomial };

// Per-tier premium, $/GB, for an at-the-money call written on the rule's
// price (spot = strike), maturity so_ttm_days / 365. One entry per regular
// tier, in table order; the unlimited tier carries no options. The bs method
// prices the European contract (comparison only); the others are American.
std::vector<double> so_premium_table(const TierTable& table, const SimConfig& cfg,
                                     StrikeRule rule, PricingMethod method);

} // namespace cdnmarket
