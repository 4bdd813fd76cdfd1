#include "grl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace grl {

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string p_vs_graph(const ExperimentSummary& s, EstimatorKind k) {
  if (k == EstimatorKind::GraphRLearner || !s.per_estimator.count(EstimatorKind::GraphRLearner)) return "-";
  return format_p(s.compare(k, EstimatorKind::GraphRLearner).mse.p);
}

}  // namespace

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string format_p(double p) {
  char buf[64];
  if (p != 0.0 && p < 1e-3) std::snprintf(buf, sizeof buf, "%.2e", p);
  else std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

RenderedSummary render_summary(const ExperimentSummary& summary, const std::string& title) {
  RenderedSummary out;

  std::ostringstream t;
  t << title << " (" << summary.seeds.size() << " seeds)\n\n";
  const std::vector<std::string> header = {"estimator", "mean MSE ± std", "hub MSE", "periphery MSE", "p vs GraphRLearner"};
  std::vector<std::vector<std::string>> rows;
  for (EstimatorKind k : summary.estimators) {
    const EstimatorSummary& e = summary.at(k);
    rows.push_back({to_string(k), format_fixed(e.mean_mse) + " ± " + format_fixed(e.std_mse),
                    format_fixed(e.mean_hub_mse), format_fixed(e.mean_periphery_mse), p_vs_graph(summary, k)});
  }
  // "±" is two bytes but one column wide.
  auto width_of = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = width_of(header[c]);
    for (const auto& r : rows) widths[c] = std::max(widths[c], width_of(r[c]));
  }
  auto emit_row = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::size_t extra = r[c].size() - width_of(r[c]);
      t << pad(r[c], widths[c] + extra) << (c + 1 < r.size() ? "  " : "\n");
    }
  };
  emit_row(header);
  std::size_t total = 0;
  for (std::size_t w : widths) total += w + 2;
  t << std::string(total - 2, '-') << "\n";
  for (const auto& r : rows) emit_row(r);
  if (summary.verdict) t << "\nTwo-Model Test: " << to_string(*summary.verdict) << "\n";
  out.text = t.str();

  constexpr double kWidth = 640.0;
  constexpr double kHeight = 360.0;
  constexpr double kLeft = 60.0;
  constexpr double kBottom = 300.0;
  constexpr double kTop = 40.0;
  double top_value = 0.0;
  for (EstimatorKind k : summary.estimators) {
    const EstimatorSummary& e = summary.at(k);
    top_value = std::max(top_value, e.mean_mse + e.std_mse);
  }
  if (!(top_value > 0.0)) top_value = 1.0;
  const double scale = (kBottom - kTop) / top_value;
  const std::size_t n = summary.estimators.size();
  const double slot = n == 0 ? 0.0 : (kWidth - kLeft - 20.0) / static_cast<double>(n);

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  s << "  <title>" << xml_escape(title) << "</title>\n";
  s << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  s << "  <text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">"
    << xml_escape(title) << " (mean CATE MSE ± std)</text>\n";
  s << "  <line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kWidth - 10 << "\" y2=\"" << kBottom
    << "\" stroke=\"black\"/>\n";
  s << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kBottom
    << "\" stroke=\"black\"/>\n";
  s << "  <text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4 << "\" text-anchor=\"end\" font-family=\"monospace\" "
    << "font-size=\"10\">" << format_fixed(top_value, 2) << "</text>\n";
  s << "  <text x=\"" << kLeft - 6 << "\" y=\"" << kBottom + 4 << "\" text-anchor=\"end\" font-family=\"monospace\" "
    << "font-size=\"10\">0</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const EstimatorKind k = summary.estimators[i];
    const EstimatorSummary& e = summary.at(k);
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double bar_w = slot * 0.6;
    const double h = e.mean_mse * scale;
    const double hi = kBottom - (e.mean_mse + e.std_mse) * scale;
    const double lo = kBottom - std::max(0.0, e.mean_mse - e.std_mse) * scale;
    s << "  <g>\n";
    s << "    <rect class=\"bar\" x=\"" << format_fixed(cx - bar_w / 2, 2) << "\" y=\"" << format_fixed(kBottom - h, 2)
      << "\" width=\"" << format_fixed(bar_w, 2) << "\" height=\"" << format_fixed(h, 2)
      << "\" fill=\"#4a78b5\"/>\n";
    s << "    <line class=\"whisker\" x1=\"" << format_fixed(cx, 2) << "\" y1=\"" << format_fixed(hi, 2) << "\" x2=\""
      << format_fixed(cx, 2) << "\" y2=\"" << format_fixed(lo, 2) << "\" stroke=\"black\"/>\n";
    s << "    <line x1=\"" << format_fixed(cx - 6, 2) << "\" y1=\"" << format_fixed(hi, 2) << "\" x2=\""
      << format_fixed(cx + 6, 2) << "\" y2=\"" << format_fixed(hi, 2) << "\" stroke=\"black\"/>\n";
    s << "    <line x1=\"" << format_fixed(cx - 6, 2) << "\" y1=\"" << format_fixed(lo, 2) << "\" x2=\""
      << format_fixed(cx + 6, 2) << "\" y2=\"" << format_fixed(lo, 2) << "\" stroke=\"black\"/>\n";
    s << "    <text x=\"" << format_fixed(cx, 2) << "\" y=\"" << kBottom + 16
      << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">" << xml_escape(to_string(k))
      << "</text>\n";
    s << "    <text x=\"" << format_fixed(cx, 2) << "\" y=\"" << format_fixed(kBottom - h - 4, 2)
      << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">" << format_fixed(e.mean_mse)
      << "</text>\n";
    s << "  </g>\n";
  }
  s << "</svg>\n";
  out.svg = s.str();
  return out;
}

}  // namespace grl
