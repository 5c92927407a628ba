#pragma once

// Artifact formats: binary PGM for grid sets, CSV for series and measures, provenance comments.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergograph/geometry.hpp"

namespace ergograph {

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a of the compact dump (keys sorted), printed as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  /// `# ergograph version=V config=H seed=S`
  std::string comment() const;
};

/// Raw 8-bit raster, row 0 at the top.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// P5 with maxval 255. Provenance and the grid geometry travel as comment lines.
void write_pgm(std::ostream& out, const Image& image, const Provenance& prov,
               const std::vector<std::string>& extra_comments = {});
Image read_pgm(std::istream& in, std::vector<std::string>* comments = nullptr);

/// Occupied cells are 255; the highest row of cells is the top of the image.
Image to_image(const GridSet& set);
void write_gridset_pgm(std::ostream& out, const GridSet& set, const Provenance& prov);
/// Restores the geometry from the `# grid` comment written by write_gridset_pgm.
GridSet read_gridset_pgm(std::istream& in);

/// Log-density heat map of a measure on the given lattice; empty measure gives an all-zero image.
Image render_measure(const EmpiricalMeasure& mu, const GridGeometry& geometry);

/// {"verdict", "stats", "samples", "seed", "note"}; non-finite stats become strings.
nlohmann::json to_json(const DiagnosticReport& report);

/// `x1,x2,w` rows with 17 significant digits.
void write_measure_csv(std::ostream& out, const EmpiricalMeasure& mu);
/// Inverse of write_measure_csv; `#` lines are skipped, the column row is required.
EmpiricalMeasure read_measure_csv(std::istream& in);

}  // namespace ergograph
