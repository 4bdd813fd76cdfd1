#pragma once

#include <string>

#include "grl/stats.hpp"

namespace grl {

struct RenderedSummary {
  std::string text;  // monospace table
  std::string svg;   // bar chart of mean MSE with ±1 std whiskers
};

RenderedSummary render_summary(const ExperimentSummary& summary, const std::string& title);

/// Fixed-point with `decimals` digits, as used in the summary table.
std::string format_fixed(double v, int decimals = 4);
/// Three significant digits, scientific below 1e-3.
std::string format_p(double p);

}  // namespace grl
