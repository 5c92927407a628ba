#include "ergograph/skew_product.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ergograph {

CircleAngle expand_map(CircleAngle t, int k) { return CircleAngle(k * t.value()); }

SkewState step_F(const FiberFamily& family, const SkewState& state) {
  return {expand_map(state.t, family.k()), family.eval(state.t, state.x)};
}

SkewState step_F_n(const FiberFamily& family, SkewState state, std::uint64_t n) {
  for (std::uint64_t i = 0; i < n; ++i) state = step_F(family, state);
  return state;
}

SolenoidState step_G(const FiberFamily& family, const SolenoidState& state) {
  const int k = state.s.k();
  const double t0 = state.s.t0().value();
  const int d = std::min(static_cast<int>(std::floor(k * t0)), k - 1);
  std::vector<std::uint8_t> digits;
  digits.reserve(state.s.depth() + 1);
  digits.push_back(static_cast<std::uint8_t>(d));
  digits.insert(digits.end(), state.s.digits().begin(), state.s.digits().end());
  return {SolenoidPoint(expand_map(state.s.t0(), k), std::move(digits), k), family.eval(state.s.t0(), state.x)};
}

SolenoidState step_G_inv(const FiberFamily& family, const SolenoidState& state) {
  if (state.s.depth() == 0) throw std::domain_error("step_G_inv: backward word is empty");
  const CircleAngle t1(state.s.coordinate(1));
  std::vector<std::uint8_t> digits(state.s.digits().begin() + 1, state.s.digits().end());
  return {SolenoidPoint(t1, std::move(digits), state.s.k()), family.inverse(t1, state.x)};
}

SolenoidPoint sample_solenoid(Rng& rng, std::size_t depth, int k) {
  const CircleAngle t0(rng.uniform());
  std::vector<std::uint8_t> digits(depth);
  for (auto& d : digits) d = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(k)));
  return SolenoidPoint(t0, std::move(digits), k);
}

SolenoidPoint sample_solenoid(std::uint64_t seed, std::size_t depth, int k) {
  Rng rng(seed);
  return sample_solenoid(rng, depth, k);
}

std::string format_solenoid(const SolenoidPoint& s) {
  std::ostringstream os;
  os << std::setprecision(17) << s.t0().value() << ';';
  for (std::size_t i = 0; i < s.depth(); ++i) {
    if (i) os << ',';
    os << static_cast<int>(s.digits()[i]);
  }
  return os.str();
}

SolenoidPoint parse_solenoid(const std::string& text, int k) {
  const auto semi = text.find(';');
  if (semi == std::string::npos) throw std::invalid_argument("parse_solenoid: missing ';'");
  std::size_t used = 0;
  double t0 = 0.0;
  try {
    t0 = std::stod(text.substr(0, semi), &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("parse_solenoid: bad t0");
  }
  if (used != semi || !(t0 >= 0.0 && t0 < 1.0)) throw std::invalid_argument("parse_solenoid: bad t0");
  std::vector<std::uint8_t> digits;
  const char* p = text.data() + semi + 1;
  const char* end = text.data() + text.size();
  while (p < end) {
    int d = -1;
    auto [next, ec] = std::from_chars(p, end, d);
    if (ec != std::errc() || d < 0 || d >= k) throw std::invalid_argument("parse_solenoid: bad digit");
    digits.push_back(static_cast<std::uint8_t>(d));
    p = next;
    if (p < end) {
      if (*p != ',' || p + 1 == end) throw std::invalid_argument("parse_solenoid: expected ','");
      ++p;
    }
  }
  return SolenoidPoint(CircleAngle(t0), std::move(digits), k);
}

int BaseOrbit::window_length(int k) { return static_cast<int>(std::ceil(64.0 / std::log2(static_cast<double>(k)))); }

BaseOrbit::BaseOrbit(CircleAngle t0, int k, std::uint64_t seed) : k_(k), rng_(seed) {
  if (k < 2) throw std::invalid_argument("BaseOrbit: k must be >= 2");
  const int n = window_length(k);
  window_.resize(static_cast<std::size_t>(n));
  // Base-k expansion of t0; exact for power-of-two k until the mantissa runs out.
  double r = t0.value();
  for (auto& d : window_) {
    r *= k;
    const double f = std::floor(r);
    d = static_cast<std::uint8_t>(std::min(f, static_cast<double>(k - 1)));
    r -= f;
  }
  refresh();
}

void BaseOrbit::advance() {
  window_[head_] = static_cast<std::uint8_t>(rng_.below(static_cast<std::uint64_t>(k_)));
  head_ = (head_ + 1) % window_.size();
  refresh();
}

void BaseOrbit::refresh() {
  // Horner from the deepest digit.
  const std::size_t n = window_.size();
  double t = 0.0;
  for (std::size_t i = n; i-- > 0;) t = (t + window_[(head_ + i) % n]) / k_;
  t_ = CircleAngle(t);
}

std::vector<SkewState> skew_orbit(const FiberFamily& family, SkewState start, std::size_t n, std::uint64_t seed) {
  std::vector<SkewState> out;
  out.reserve(n + 1);
  BaseOrbit base(start.t, family.k(), seed);
  SkewState s{base.current(), start.x};
  out.push_back(s);
  for (std::size_t i = 0; i < n; ++i) {
    s.x = family.eval(s.t, s.x);
    base.advance();
    s.t = base.current();
    out.push_back(s);
  }
  return out;
}

void write_orbit_csv(std::ostream& out, const std::vector<SkewState>& orbit) {
  out << "n,t,x1,x2\n" << std::setprecision(17);
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    out << i << ',' << orbit[i].t.value() << ',' << orbit[i].x.x1 << ',' << orbit[i].x.x2 << '\n';
  }
}

}  // namespace ergograph
