#include "srrl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace srrl {

namespace {

constexpr int kSize = 600;
constexpr int kMargin = 40;

std::string ramp_color(int round, int max_round) {
  // steel blue -> brick red
  const double f = max_round > 0 ? static_cast<double>(round) / max_round : 0.0;
  const int r = static_cast<int>(std::lround(31 + f * (214 - 31)));
  const int g = static_cast<int>(std::lround(119 + f * (39 - 119)));
  const int b = static_cast<int>(std::lround(180 + f * (40 - 180)));
  std::ostringstream out;
  out << "rgb(" << r << "," << g << "," << b << ")";
  return out.str();
}

void emit_marker(std::ostringstream& out, double px, double py, int condition,
                 const std::string& color) {
  switch (condition % 4) {
    case 0:
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"4\" fill=\"" << color
          << "\" fill-opacity=\"0.75\"/>\n";
      break;
    case 1:
      out << "<rect x=\"" << px - 3.5 << "\" y=\"" << py - 3.5
          << "\" width=\"7\" height=\"7\" fill=\"" << color << "\" fill-opacity=\"0.75\"/>\n";
      break;
    case 2:
      out << "<polygon points=\"" << px << "," << py - 4.5 << " " << px - 4 << "," << py + 3.5
          << " " << px + 4 << "," << py + 3.5 << "\" fill=\"" << color
          << "\" fill-opacity=\"0.75\"/>\n";
      break;
    default:
      out << "<polygon points=\"" << px << "," << py - 5 << " " << px + 5 << "," << py << " "
          << px << "," << py + 5 << " " << px - 5 << "," << py << "\" fill=\"" << color
          << "\" fill-opacity=\"0.75\"/>\n";
      break;
  }
}

}  // namespace

std::string render_scatter_svg(const std::vector<ScatterPoint>& points, int max_round,
                               const std::string& title) {
  double lo = -1.0;
  double hi = 1.0;
  for (const auto& p : points) {
    lo = std::min({lo, p.x, p.y});
    hi = std::max({hi, p.x, p.y});
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double span = hi - lo;

  auto to_px = [&](double v) {
    return kMargin + (v - lo) / span * (kSize - 2 * kMargin);
  };
  auto to_py = [&](double v) {
    return kSize - kMargin - (v - lo) / span * (kSize - 2 * kMargin);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kSize << " " << kSize
      << "\" width=\"" << kSize << "\" height=\"" << kSize << "\">\n";
  out << "<rect width=\"" << kSize << "\" height=\"" << kSize << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kSize / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // axes through the origin when visible
  if (lo < 0.0 && hi > 0.0) {
    out << "<line x1=\"" << to_px(lo) << "\" y1=\"" << to_py(0.0) << "\" x2=\"" << to_px(hi)
        << "\" y2=\"" << to_py(0.0) << "\" stroke=\"#cccccc\"/>\n";
    out << "<line x1=\"" << to_px(0.0) << "\" y1=\"" << to_py(lo) << "\" x2=\"" << to_px(0.0)
        << "\" y2=\"" << to_py(hi) << "\" stroke=\"#cccccc\"/>\n";
  }

  for (const auto& p : points) {
    emit_marker(out, to_px(p.x), to_py(p.y), p.condition, ramp_color(p.round, max_round));
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace srrl
