#include "cdnmarket/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdnmarket {

namespace {

constexpr double kDustGb = 1e-12; // trades below this are dropped

void validate_positions(const std::vector<MarketPosition>& positions) {
  for (const MarketPosition& p : positions) {
    if (p.surplus_gb < 0.0 || p.deficit_gb < 0.0)
      throw std::invalid_argument("market position: negative quantity for " + p.os_id);
    if (p.surplus_gb > 0.0 && p.deficit_gb > 0.0)
      throw std::invalid_argument("market position: " + p.os_id +
                                  " cannot hold surplus and deficit at once");
  }
}

} // namespace

std::vector<Trade> clear_social(const std::vector<MarketPosition>& positions, int day) {
  validate_positions(positions);
  double total_surplus = 0.0, total_deficit = 0.0;
  for (const MarketPosition& p : positions) {
    total_surplus += p.surplus_gb;
    total_deficit += p.deficit_gb;
  }
  double volume = std::min(total_surplus, total_deficit);
  std::vector<Trade> trades;
  if (volume <= kDustGb) return trades;

  for (const MarketPosition& seller : positions) {
    if (seller.surplus_gb <= 0.0) continue;
    double seller_share = seller.surplus_gb / total_surplus;
    for (const MarketPosition& buyer : positions) {
      if (buyer.deficit_gb <= 0.0) continue;
      double qty = volume * seller_share * (buyer.deficit_gb / total_deficit);
      if (qty <= kDustGb) continue;
      double price = 0.5 * (seller.reservation_unit_price + buyer.penalty_unit_price);
      price = std::clamp(price, 0.0, buyer.penalty_unit_price);
      trades.push_back({seller.os_id, buyer.os_id, qty, price, day});
    }
  }
  return trades;
}

std::vector<Trade> clear_auction(const std::vector<MarketPosition>& positions,
                                 const std::map<std::string, double>& asks,
                                 const std::map<std::string, double>& bids, int day) {
  validate_positions(positions);

  struct Order {
    std::string os_id;
    double price;
    double quantity;
  };
  std::vector<Order> supply, demand;
  for (const MarketPosition& p : positions) {
    if (p.surplus_gb > kDustGb) {
      auto it = asks.find(p.os_id);
      if (it == asks.end()) throw std::invalid_argument("clear_auction: missing ask for " + p.os_id);
      supply.push_back({p.os_id, it->second, p.surplus_gb});
    }
    if (p.deficit_gb > kDustGb) {
      auto it = bids.find(p.os_id);
      if (it == bids.end()) throw std::invalid_argument("clear_auction: missing bid for " + p.os_id);
      demand.push_back({p.os_id, it->second, p.deficit_gb});
    }
  }
  std::sort(supply.begin(), supply.end(), [](const Order& a, const Order& b) {
    return a.price != b.price ? a.price < b.price : a.os_id < b.os_id;
  });
  std::sort(demand.begin(), demand.end(), [](const Order& a, const Order& b) {
    return a.price != b.price ? a.price > b.price : a.os_id < b.os_id;
  });

  // Walk both books in price order; units trade while the ask does not
  // exceed the bid. The last crossing pair defines the marginal prices.
  double volume = 0.0, marginal_ask = 0.0, marginal_bid = 0.0;
  {
    std::size_t si = 0, di = 0;
    double s_left = supply.empty() ? 0.0 : supply[0].quantity;
    double d_left = demand.empty() ? 0.0 : demand[0].quantity;
    while (si < supply.size() && di < demand.size() && supply[si].price <= demand[di].price) {
      double q = std::min(s_left, d_left);
      volume += q;
      marginal_ask = supply[si].price;
      marginal_bid = demand[di].price;
      s_left -= q;
      d_left -= q;
      if (s_left <= kDustGb && ++si < supply.size()) s_left = supply[si].quantity;
      if (d_left <= kDustGb && ++di < demand.size()) d_left = demand[di].quantity;
    }
  }

  std::vector<Trade> trades;
  if (volume <= kDustGb) return trades;
  double price = 0.5 * (marginal_ask + marginal_bid);

  // Allocate the cleared volume in book order and pair greedily.
  std::size_t si = 0, di = 0;
  double s_fill = std::min(volume, supply[0].quantity);
  double d_fill = std::min(volume, demand[0].quantity);
  double s_total = volume, d_total = volume;
  while (s_total > kDustGb && d_total > kDustGb) {
    double q = std::min(s_fill, d_fill);
    if (q > kDustGb)
      trades.push_back({supply[si].os_id, demand[di].os_id, q, price, day});
    s_fill -= q;
    d_fill -= q;
    s_total -= q;
    d_total -= q;
    if (s_fill <= kDustGb && ++si < supply.size()) s_fill = std::min(s_total, supply[si].quantity);
    if (d_fill <= kDustGb && ++di < demand.size()) d_fill = std::min(d_total, demand[di].quantity);
  }
  return trades;
}

NettedFlows redistribute_internal(const std::vector<MarketPosition>& positions) {
  validate_positions(positions);
  double total_surplus = 0.0, total_deficit = 0.0;
  for (const MarketPosition& p : positions) {
    total_surplus += p.surplus_gb;
    total_deficit += p.deficit_gb;
  }
  NettedFlows flows;
  flows.residual_deficit_gb = std::max(0.0, total_deficit - total_surplus);
  flows.residual_surplus_gb = std::max(0.0, total_surplus - total_deficit);
  return flows;
}

} // namespace cdnmarket
