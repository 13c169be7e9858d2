#pragma once

#include <cstddef>
#include <vector>

namespace prodnet {

/// One purchaser-input-year observation of log-changes (year t relative to t-1).
struct PanelObservation {
  std::size_t i = 0;  ///< purchasing sector
  std::size_t j = 0;  ///< input sector
  int t = 0;
  double dlog_omega = 0.0;
  double dlog_p = 0.0;
  double dlog_phi = 0.0;
};

using Panel = std::vector<PanelObservation>;

}  // namespace prodnet
