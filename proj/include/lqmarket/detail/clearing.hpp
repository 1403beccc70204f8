#pragma once

#include "lqmarket/model.hpp"

namespace lqmarket::detail {

/// Shared core of the planner and the mechanism: clear the cap
/// complementarity system on the reports and price everyone uniformly at
/// wholesale plus the cap multipliers. Shapes must be validated upstream.
struct ClearingCore {
  Vector duals;      // xi, one per period
  Vector prices;     // wholesale + duals
  Allocation allocation;
  double welfare;    // reported welfare at the allocation
};

ClearingCore clear_core(const BidProfile& bids, const MarketConfig& config);

/// Shape and sign validation without the message-space box check.
void validate_shapes(const BidProfile& bids, const MarketConfig& config);

}  // namespace lqmarket::detail
