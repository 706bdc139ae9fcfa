#pragma once

#include <map>
#include <string>
#include <vector>

namespace cdnmarket {

// End-of-day position of one OS. At clearing time an OS is either a seller
// (surplus) or a buyer (deficit), never both.
struct MarketPosition {
  std::string os_id;
  double surplus_gb = 0.0;
  double deficit_gb = 0.0;
  double reservation_unit_price = 0.0; // $/GB the seller originally paid
  double penalty_unit_price = 0.0;     // $/GB the buyer avoids by trading
};

struct Trade {
  std::string seller;
  std::string buyer;
  double quantity_gb = 0.0;
  double unit_price = 0.0;
  int clearing_day = 0;
};

// Social clearing: volume = min(total surplus, total deficit), allocated
// pro-rata on both sides. The unit price is the midpoint of the seller's
// paid price and the buyer's avoided penalty, clamped so no trade ever
// exceeds the buyer's penalty price.
std::vector<Trade> clear_social(const std::vector<MarketPosition>& positions, int day);

// Uniform-price double auction: asks ascending, bids descending, ties broken
// by os_id; every executed trade clears at the midpoint of the marginal ask
// and the marginal bid. Empty result when the books do not cross.
std::vector<Trade> clear_auction(const std::vector<MarketPosition>& positions,
                                 const std::map<std::string, double>& asks,
                                 const std::map<std::string, double>& bids, int day);

struct NettedFlows {
  double residual_deficit_gb = 0.0;
  double residual_surplus_gb = 0.0;
};

// CDN-internal netting of surpluses against deficits; at most one residual
// side is nonzero. OS-side billing is unaffected.
NettedFlows redistribute_internal(const std::vector<MarketPosition>& positions);

} // namespace cdnmarket
