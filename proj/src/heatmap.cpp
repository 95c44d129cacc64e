#include "qatm/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "qatm/error.hpp"
#include "qatm/image.hpp"

namespace qatm {

void write_heatmap(const QualityMap& map, std::uint32_t stride_px, const std::filesystem::path& pgm_path) {
  const auto values = map.values.data();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double range = hi - lo;

  Image img(map.width(), map.height(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    img.data[i] = range > 0.0 ? static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - lo) / range)) : 0;
  }
  save_pnm(img, pgm_path);

  nlohmann::json meta = {
      {"min", lo},
      {"max", hi},
      {"width", map.width()},
      {"height", map.height()},
      {"stride_px", stride_px},
      {"side", map.side == MapSide::kSearch ? "search" : "template"},
  };
  std::filesystem::path sidecar = pgm_path;
  sidecar += ".json";
  std::ofstream out(sidecar);
  if (!out) throw IoError("cannot write " + sidecar.string());
  out << meta.dump(2) << '\n';
}

}  // namespace qatm
