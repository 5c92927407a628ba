#pragma once

// Base map phi(t) = k t mod 1, the skew product F(t, x) = (phi(t), f_t(x)) and its invertible
// solenoidal extension G.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ergograph/fiber_family.hpp"
#include "ergograph/geometry.hpp"
#include "ergograph/rng.hpp"

namespace ergograph {

CircleAngle expand_map(CircleAngle t, int k);

struct SkewState {
  CircleAngle t;
  PlanePoint x;
};

struct SolenoidState {
  SolenoidPoint s;
  PlanePoint x;
};

/// (phi(t), f_t(x)).
SkewState step_F(const FiberFamily& family, const SkewState& state);
SkewState step_F_n(const FiberFamily& family, SkewState state, std::uint64_t n);

/// Forward: prepends the digit floor(k t0) to the backward word (depth + 1) and applies f_{t0}.
SolenoidState step_G(const FiberFamily& family, const SolenoidState& state);
/// Inverse: pops t_{-1} (depth - 1) and applies f_{t_{-1}}^{-1}. Throws std::domain_error at depth
/// 0 or when x is not in the image of f_{t_{-1}}.
SolenoidState step_G_inv(const FiberFamily& family, const SolenoidState& state);

/// t0 uniform on [0, 1), digits i.i.d. uniform on {0, ..., k-1}.
SolenoidPoint sample_solenoid(Rng& rng, std::size_t depth, int k);
SolenoidPoint sample_solenoid(std::uint64_t seed, std::size_t depth, int k);

/// `t0;d-1,d-2,...` with t0 printed to 17 significant digits.
std::string format_solenoid(const SolenoidPoint& s);
SolenoidPoint parse_solenoid(const std::string& text, int k);

/// Forward orbit of phi kept as a window of base-k digits. Doubles cannot follow k t mod 1 for
/// more than about 53 / log2(k) steps, so digits shifted out of the window are replaced by fresh
/// i.i.d. digits: the result is an exact orbit of a Lebesgue-random point that stays within
/// k^(n - J) of the literal orbit of t0 at step n (J = window length).
class BaseOrbit {
 public:
  BaseOrbit(CircleAngle t0, int k, std::uint64_t seed);

  CircleAngle current() const { return t_; }
  int k() const { return k_; }
  /// Leading digit floor(k t).
  int leading_digit() const { return window_[head_]; }
  void advance();

  /// Window length: enough digits to fill 64 bits.
  static int window_length(int k);

 private:
  void refresh();

  int k_;
  Rng rng_;
  std::vector<std::uint8_t> window_;  // ring buffer, window_[head_] is the leading digit
  std::size_t head_ = 0;
  CircleAngle t_;
};

/// F iterates with the base driven by a BaseOrbit. Returns states 0..n (n + 1 rows).
std::vector<SkewState> skew_orbit(const FiberFamily& family, SkewState start, std::size_t n, std::uint64_t seed);

/// CSV `n,t,x1,x2` with a column row and 17 significant digits; provenance goes above it.
void write_orbit_csv(std::ostream& out, const std::vector<SkewState>& orbit);

}  // namespace ergograph
