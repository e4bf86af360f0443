#pragma once

#include <string>
#include <vector>

namespace srrl {

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int round = 0;
  int condition = 0;
};

// 600x600 scatter plot: color ramp over rounds, marker shape per condition
// (circle / square / triangle / diamond, cycling). Deterministic output for
// deterministic input.
std::string render_scatter_svg(const std::vector<ScatterPoint>& points, int max_round,
                               const std::string& title);

}  // namespace srrl
