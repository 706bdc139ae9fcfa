#include "cdnmarket/option_pricing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cdnmarket {

namespace {

constexpr int kCriticalPriceMaxIter = 200;
constexpr int kPremiumTableLatticeSteps = 2000;

double norm_pdf(double x) { return 0.3989422804014326779 * std::exp(-0.5 * x * x); }

struct BsParts {
  double d1, d2, df_r, df_q; // discount factors exp(-rT), exp(-qT)
};

BsParts bs_parts(double s, double k, double r, double q, double sigma, double t) {
  double vol_sqrt_t = sigma * std::sqrt(t);
  BsParts parts;
  parts.d1 = (std::log(s / k) + (r - q + 0.5 * sigma * sigma) * t) / vol_sqrt_t;
  parts.d2 = parts.d1 - vol_sqrt_t;
  parts.df_r = std::exp(-r * t);
  parts.df_q = std::exp(-q * t);
  return parts;
}

double bs_value(double s, double k, double r, double q, double sigma, double t, OptionKind kind) {
  BsParts p = bs_parts(s, k, r, q, sigma, t);
  if (kind == OptionKind::call)
    return s * p.df_q * norm_cdf(p.d1) - k * p.df_r * norm_cdf(p.d2);
  return k * p.df_r * norm_cdf(-p.d2) - s * p.df_q * norm_cdf(-p.d1);
}

// Early-exercise critical price for the quadratic approximation. Solves
// f(S) = 0 on a bracket known to contain the root; Newton steps are taken
// while they stay inside the bracket, otherwise it falls back to bisection.
// f is scale-invariant in price up to a factor of strike, so the tolerance
// is taken relative to the strike.
template <typename F, typename DF>
double solve_critical_price(F f, DF df, double lo, double hi, double seed, double strike) {
  double tol = 1e-12 * std::max(strike, 1e-12);
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) throw std::runtime_error("baw_american: critical price not bracketed");
  double x = std::clamp(seed, lo, hi);
  for (int it = 0; it < kCriticalPriceMaxIter; ++it) {
    double fx = f(x);
    if (std::abs(fx) < tol) return x;
    if (fx * flo <= 0.0) {
      hi = x;
    } else {
      lo = x;
      flo = fx;
    }
    double dfx = df(x);
    double next = (dfx != 0.0) ? x - fx / dfx : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-16 * std::max(1.0, x)) return next;
    x = next;
  }
  throw std::runtime_error("baw_american: critical price iteration did not converge");
}

double baw_call(const OptionParams& p) {
  double s = p.spot, k = p.strike, r = p.rate, q = p.dividend_yield;
  double sigma = p.volatility, t = p.maturity;
  double b = r - q; // cost of carry
  double euro = bs_value(s, k, r, q, sigma, t, OptionKind::call);
  if (b >= r) return euro; // no dividend advantage: early exercise never pays

  double sig2 = sigma * sigma;
  double m = 2.0 * r / sig2;
  double n = 2.0 * b / sig2;
  double kt = -std::expm1(-r * t); // 1 - exp(-rT)
  double m_over_kt = (r != 0.0) ? m / kt : 2.0 / (sig2 * t);
  double q2 = 0.5 * (-(n - 1.0) + std::sqrt((n - 1.0) * (n - 1.0) + 4.0 * m_over_kt));
  double df_carry = std::exp((b - r) * t);
  double vol_sqrt_t = sigma * std::sqrt(t);

  auto d1_at = [&](double sx) {
    return (std::log(sx / k) + (b + 0.5 * sig2) * t) / vol_sqrt_t;
  };
  auto f = [&](double sx) {
    double d1 = d1_at(sx);
    double euro_x = bs_value(sx, k, r, q, sigma, t, OptionKind::call);
    return euro_x + (1.0 - df_carry * norm_cdf(d1)) * sx / q2 - sx + k;
  };
  auto df = [&](double sx) {
    double d1 = d1_at(sx);
    double delta = df_carry * norm_cdf(d1);
    return delta + (1.0 - delta - df_carry * norm_pdf(d1) / vol_sqrt_t) / q2 - 1.0;
  };

  // Seed from the perpetual critical price, per the original construction.
  double q2_inf = 0.5 * (-(n - 1.0) + std::sqrt((n - 1.0) * (n - 1.0) + 4.0 * m));
  double s_inf = k / (1.0 - 1.0 / q2_inf);
  double h2 = -(b * t + 2.0 * vol_sqrt_t) * k / (s_inf - k);
  double seed = k + (s_inf - k) * (1.0 - std::exp(h2));

  double hi = std::max(seed * 2.0, k * 2.0);
  for (int grow = 0; f(hi) > 0.0 && grow < 200; ++grow) hi *= 2.0;
  double s_crit = solve_critical_price(f, df, k, hi, seed, k);

  if (s >= s_crit) return s - k;
  double a2 = (s_crit / q2) * (1.0 - df_carry * norm_cdf(d1_at(s_crit)));
  double value = euro + a2 * std::pow(s / s_crit, q2);
  return std::max({value, euro, s - k});
}

double baw_put(const OptionParams& p) {
  double s = p.spot, k = p.strike, r = p.rate, q = p.dividend_yield;
  double sigma = p.volatility, t = p.maturity;
  double b = r - q;
  double euro = bs_value(s, k, r, q, sigma, t, OptionKind::put);
  if (r <= 0.0) return euro; // without interest on the strike, waiting dominates

  double sig2 = sigma * sigma;
  double m = 2.0 * r / sig2;
  double n = 2.0 * b / sig2;
  double kt = -std::expm1(-r * t);
  double q1 = 0.5 * (-(n - 1.0) - std::sqrt((n - 1.0) * (n - 1.0) + 4.0 * m / kt));
  double df_carry = std::exp((b - r) * t);
  double vol_sqrt_t = sigma * std::sqrt(t);

  auto d1_at = [&](double sx) {
    return (std::log(sx / k) + (b + 0.5 * sig2) * t) / vol_sqrt_t;
  };
  auto f = [&](double sx) {
    double d1 = d1_at(sx);
    double euro_x = bs_value(sx, k, r, q, sigma, t, OptionKind::put);
    return euro_x - (1.0 - df_carry * norm_cdf(-d1)) * sx / q1 - k + sx;
  };
  auto df = [&](double sx) {
    double d1 = d1_at(sx);
    double delta = -df_carry * norm_cdf(-d1); // put delta under carry
    return delta - (1.0 + df_carry * norm_pdf(d1) / vol_sqrt_t - df_carry * norm_cdf(-d1)) / q1 + 1.0;
  };

  double q1_inf = 0.5 * (-(n - 1.0) - std::sqrt((n - 1.0) * (n - 1.0) + 4.0 * m));
  double s_inf = k / (1.0 - 1.0 / q1_inf);
  double h1 = (b * t - 2.0 * vol_sqrt_t) * k / (k - s_inf);
  double seed = s_inf + (k - s_inf) * std::exp(h1);

  double lo = std::min(seed * 0.5, k * 0.5);
  for (int shrink = 0; f(lo) > 0.0 && shrink < 400; ++shrink) lo *= 0.5;
  double s_crit = solve_critical_price(f, df, lo, k, seed, k);

  if (s <= s_crit) return k - s;
  double a1 = -(s_crit / q1) * (1.0 - df_carry * norm_cdf(-d1_at(s_crit)));
  double value = euro + a1 * std::pow(s / s_crit, q1);
  return std::max({value, euro, k - s});
}

double lattice_binomial(const OptionParams& p, int steps) {
  double dt = p.maturity / steps;
  double u = std::exp(p.volatility * std::sqrt(dt));
  double d = 1.0 / u;
  double growth = std::exp((p.rate - p.dividend_yield) * dt);
  double prob = (growth - d) / (u - d);
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::invalid_argument("lattice_price: risk-neutral probability outside [0, 1]; "
                                "increase the step count");
  double disc = std::exp(-p.rate * dt);
  bool call = p.kind == OptionKind::call;
  bool american = p.style == ExerciseStyle::american;

  std::vector<double> values(steps + 1);
  std::vector<double> spots(steps + 1); // terminal layer; earlier layers differ by a power of u
  for (int j = 0; j <= steps; ++j) {
    spots[j] = p.spot * std::pow(u, j) * std::pow(d, steps - j);
    double intrinsic = call ? spots[j] - p.strike : p.strike - spots[j];
    values[j] = std::max(intrinsic, 0.0);
  }
  double layer_scale = 1.0; // u^(steps - step): spot(step, j) = spots[j] * layer_scale
  for (int step = steps - 1; step >= 0; --step) {
    layer_scale *= u;
    for (int j = 0; j <= step; ++j) {
      double cont = disc * (prob * values[j + 1] + (1.0 - prob) * values[j]);
      if (american) {
        double spot = spots[j] * layer_scale;
        double intrinsic = call ? spot - p.strike : p.strike - spot;
        cont = std::max(cont, intrinsic);
      }
      values[j] = cont;
    }
  }
  return values[0];
}

double lattice_trinomial(const OptionParams& p, int steps) {
  constexpr double lambda = 1.7320508075688772; // sqrt(3)
  double dt = p.maturity / steps;
  double sqrt_dt = std::sqrt(dt);
  double u = std::exp(lambda * p.volatility * sqrt_dt);
  double drift = p.rate - p.dividend_yield - 0.5 * p.volatility * p.volatility;
  double pu = 1.0 / (2.0 * lambda * lambda) + drift * sqrt_dt / (2.0 * lambda * p.volatility);
  double pd = 1.0 / (2.0 * lambda * lambda) - drift * sqrt_dt / (2.0 * lambda * p.volatility);
  double pm = 1.0 - pu - pd;
  if (!(pu >= 0.0 && pu <= 1.0 && pd >= 0.0 && pd <= 1.0 && pm >= 0.0 && pm <= 1.0))
    throw std::invalid_argument("lattice_price: risk-neutral probability outside [0, 1]; "
                                "increase the step count");
  double disc = std::exp(-p.rate * dt);
  bool call = p.kind == OptionKind::call;
  bool american = p.style == ExerciseStyle::american;

  int width = 2 * steps + 1; // node i holds move count i - step, so spot = spot0 * u^(i - step)
  std::vector<double> powers(width);
  for (int i = 0; i < width; ++i) powers[i] = std::pow(u, i - steps);
  std::vector<double> values(width);
  for (int i = 0; i < width; ++i) {
    double spot = p.spot * powers[i];
    double intrinsic = call ? spot - p.strike : p.strike - spot;
    values[i] = std::max(intrinsic, 0.0);
  }
  for (int step = steps - 1; step >= 0; --step) {
    for (int i = 0; i <= 2 * step; ++i) {
      // children in the layer just computed sit at i, i+1, i+2 (down, mid, up)
      double cont = disc * (pd * values[i] + pm * values[i + 1] + pu * values[i + 2]);
      if (american) {
        double spot = p.spot * powers[i - step + steps];
        double intrinsic = call ? spot - p.strike : p.strike - spot;
        cont = std::max(cont, intrinsic);
      }
      values[i] = cont;
    }
  }
  return values[0];
}

} // namespace

void OptionParams::validate() const {
  if (!(spot > 0.0)) throw std::invalid_argument("OptionParams: spot must be > 0");
  if (!(strike > 0.0)) throw std::invalid_argument("OptionParams: strike must be > 0");
  if (!(maturity > 0.0)) throw std::invalid_argument("OptionParams: maturity must be > 0");
  if (!(volatility > 0.0)) throw std::invalid_argument("OptionParams: volatility must be > 0");
  if (!std::isfinite(rate) || !std::isfinite(dividend_yield))
    throw std::invalid_argument("OptionParams: rate/dividend must be finite");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double bs_european(const OptionParams& p) {
  p.validate();
  if (p.style != ExerciseStyle::european)
    throw std::invalid_argument("bs_european: american style requested");
  return bs_value(p.spot, p.strike, p.rate, p.dividend_yield, p.volatility, p.maturity, p.kind);
}

double baw_american(const OptionParams& p) {
  p.validate();
  if (p.style != ExerciseStyle::american)
    throw std::invalid_argument("baw_american: european style requested");
  return p.kind == OptionKind::call ? baw_call(p) : baw_put(p);
}

double lattice_price(const OptionParams& p, const LatticeSpec& spec) {
  p.validate();
  if (spec.steps < 1) throw std::invalid_argument("lattice_price: steps must be >= 1");
  return spec.branching == LatticeBranching::binomial ? lattice_binomial(p, spec.steps)
                                                      : lattice_trinomial(p, spec.steps);
}

std::vector<double> so_premium_table(const TierTable& table, const SimConfig& cfg,
                                     StrikeRule rule, PricingMethod method) {
  cfg.validate();
  // At the money, value is linear in the strike, so one unit-scale pricing
  // serves every tier; this keeps premium/strike identical across tiers.
  OptionParams unit;
  unit.spot = 1.0;
  unit.strike = 1.0;
  unit.rate = cfg.risk_free_rate;
  unit.dividend_yield = cfg.dividend_yield;
  unit.volatility = cfg.volatility;
  unit.maturity = static_cast<double>(cfg.so_ttm_days) / 365.0;
  unit.kind = OptionKind::call;

  double unit_premium = 0.0;
  switch (method) {
    case PricingMethod::bs:
      unit.style = ExerciseStyle::european;
      unit_premium = bs_european(unit);
      break;
    case PricingMethod::baw:
      unit.style = ExerciseStyle::american;
      unit_premium = baw_american(unit);
      break;
    case PricingMethod::binomial:
      unit.style = ExerciseStyle::american;
      unit_premium = lattice_price(unit, {kPremiumTableLatticeSteps, LatticeBranching::binomial});
      break;
    case PricingMethod::trinomial:
      unit.style = ExerciseStyle::american;
      unit_premium = lattice_price(unit, {kPremiumTableLatticeSteps, LatticeBranching::trinomial});
      break;
  }

  std::vector<double> premiums;
  for (const ServiceClass& sc : table.classes) {
    if (sc.unlimited) continue;
    double strike = rule == StrikeRule::normal ? sc.normal_price : sc.low_penalty_price;
    premiums.push_back(strike * unit_premium);
  }
  return premiums;
}

} // namespace cdnmarket
