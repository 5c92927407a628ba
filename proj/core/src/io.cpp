#include "ergograph/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ergograph {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

std::string Provenance::comment() const {
  return "# ergograph version=" ERGOGRAPH_VERSION " config=" + config_hash + " seed=" + std::to_string(seed);
}

void write_pgm(std::ostream& out, const Image& image, const Provenance& prov,
               const std::vector<std::string>& extra_comments) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
    throw std::invalid_argument("write_pgm: pixel count does not match dimensions");
  }
  out << "P5\n" << prov.comment() << '\n';
  for (const auto& c : extra_comments) out << "# " << c << '\n';
  out << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw std::runtime_error("write_pgm: write failed");
}

namespace {

// Next header token, collecting comment lines.
std::string pgm_token(std::istream& in, std::vector<std::string>* comments) {
  std::string tok;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      if (comments) comments->push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
    } else if (std::isspace(c)) {
      in.get();
      if (!tok.empty()) return tok;
    } else if (c == EOF) {
      break;
    } else {
      tok.push_back(static_cast<char>(in.get()));
    }
  }
  return tok;
}

}  // namespace

Image read_pgm(std::istream& in, std::vector<std::string>* comments) {
  if (pgm_token(in, comments) != "P5") throw std::runtime_error("read_pgm: not a binary PGM");
  Image img;
  try {
    img.width = std::stoi(pgm_token(in, comments));
    img.height = std::stoi(pgm_token(in, comments));
    if (std::stoi(pgm_token(in, comments)) != 255) throw std::runtime_error("read_pgm: maxval must be 255");
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("read_pgm: malformed header");
  }
  if (img.width < 0 || img.height < 0) throw std::runtime_error("read_pgm: negative size");
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw std::runtime_error("read_pgm: truncated");
  return img;
}

Image to_image(const GridSet& set) {
  const auto& g = set.geometry();
  Image img{g.nx, g.ny, std::vector<std::uint8_t>(g.size(), 0)};
  for (int iy = 0; iy < g.ny; ++iy) {
    const std::size_t row = static_cast<std::size_t>(g.ny - 1 - iy) * static_cast<std::size_t>(g.nx);
    for (int ix = 0; ix < g.nx; ++ix) {
      if (set.test(ix, iy)) img.pixels[row + static_cast<std::size_t>(ix)] = 255;
    }
  }
  return img;
}

void write_gridset_pgm(std::ostream& out, const GridSet& set, const Provenance& prov) {
  const auto& g = set.geometry();
  std::ostringstream grid;
  grid << std::setprecision(17) << "grid lo=" << g.lo.x1 << ',' << g.lo.x2 << " h=" << g.h;
  write_pgm(out, to_image(set), prov, {grid.str()});
}

GridSet read_gridset_pgm(std::istream& in) {
  std::vector<std::string> comments;
  const Image img = read_pgm(in, &comments);
  GridGeometry g{};
  bool found = false;
  for (const auto& c : comments) {
    if (c.rfind("grid ", 0) != 0) continue;
    if (std::sscanf(c.c_str(), "grid lo=%lf,%lf h=%lf", &g.lo.x1, &g.lo.x2, &g.h) == 3) found = true;
  }
  if (!found) throw std::runtime_error("read_gridset_pgm: missing grid comment");
  g.nx = img.width;
  g.ny = img.height;
  GridSet set(g);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      if (img.pixels[static_cast<std::size_t>(g.ny - 1 - iy) * static_cast<std::size_t>(g.nx) + static_cast<std::size_t>(ix)]) {
        set.set(ix, iy);
      }
    }
  }
  return set;
}

Image render_measure(const EmpiricalMeasure& mu, const GridGeometry& g) {
  std::vector<double> mass(g.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    int ix = 0, iy = 0;
    if (g.locate(mu.points()[i], ix, iy)) mass[g.index(ix, iy)] += mu.weights()[i];
  }
  Image img{g.nx, g.ny, std::vector<std::uint8_t>(g.size(), 0)};
  double top = 0.0, floor_mass = std::numeric_limits<double>::infinity();
  for (double m : mass) {
    if (m > 0.0) {
      top = std::max(top, m);
      floor_mass = std::min(floor_mass, m);
    }
  }
  if (top == 0.0) return img;
  // Occupied cells span [1, 255] on a log scale between the lightest and heaviest cell.
  const double span = std::log(top / floor_mass);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double m = mass[g.index(ix, iy)];
      if (m <= 0.0) continue;
      const double level = span > 0.0 ? std::log(m / floor_mass) / span : 1.0;
      img.pixels[static_cast<std::size_t>(g.ny - 1 - iy) * static_cast<std::size_t>(g.nx) + static_cast<std::size_t>(ix)] =
          static_cast<std::uint8_t>(1 + std::lround(254.0 * level));
    }
  }
  return img;
}

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& mu) {
  out << "x1,x2,w\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out << mu.points()[i].x1 << ',' << mu.points()[i].x2 << ',' << mu.weights()[i] << '\n';
  }
}

EmpiricalMeasure read_measure_csv(std::istream& in) {
  std::string line;
  bool header = false;
  std::vector<PlanePoint> pts;
  std::vector<double> w;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "x1,x2,w") throw std::runtime_error("read_measure_csv: expected column row x1,x2,w");
      header = true;
      continue;
    }
    PlanePoint p;
    double wi = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream row(line);
    if (!(row >> p.x1 >> c1 >> p.x2 >> c2 >> wi) || c1 != ',' || c2 != ',') {
      throw std::runtime_error("read_measure_csv: malformed row: " + line);
    }
    pts.push_back(p);
    w.push_back(wi);
  }
  if (!header) throw std::runtime_error("read_measure_csv: missing column row");
  return EmpiricalMeasure(std::move(pts), std::move(w));
}

nlohmann::json to_json(const DiagnosticReport& report) {
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [k, v] : report.stats) {
    if (std::isfinite(v)) stats[k] = v;
    else stats[k] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  }
  nlohmann::json j{{"verdict", to_string(report.verdict)}, {"stats", stats}, {"samples", report.samples},
                   {"seed", report.seed}};
  if (!report.note.empty()) j["note"] = report.note;
  return j;
}

}  // namespace ergograph
