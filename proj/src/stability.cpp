// SPDX-License-Identifier: Apache-2.0

#include "voxprior/stability.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace voxprior {

void StabilityParams::validate() const {
  if (n_directions < 1) {
    throw Error(ErrorCode::InvalidArgument, "stability needs at least one direction");
  }
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "probability clamp must lie in (0, 0.5)");
  }
}

Index3 lateral_offset(const Vec3& s) {
  const double ax = std::abs(s.x());
  const double ay = std::abs(s.y());
  if (ax > ay) return {s.x() > 0 ? 1 : -1, 0, 0};
  if (ay > ax) return {0, s.y() > 0 ? 1 : -1, 0};
  if (s.x() > 0) return s.y() > 0 ? Index3{1, 0, 0} : Index3{0, -1, 0};
  return s.y() > 0 ? Index3{0, 1, 0} : Index3{-1, 0, 0};
}

std::vector<Index3> support_candidates(const GridFrame& frame, const Index3& voxel,
                                       const Vec3& direction, bool opposite_lateral) {
  std::vector<Index3> out;
  const Index3 below{voxel.x, voxel.y, voxel.z - 1};
  if (frame.contains(below)) out.push_back(below);
  const Index3 lat = lateral_offset(direction);
  const Index3 ahead{voxel.x + lat.x, voxel.y + lat.y, voxel.z};
  if (frame.contains(ahead)) out.push_back(ahead);
  if (opposite_lateral) {
    const Index3 behind{voxel.x - lat.x, voxel.y - lat.y, voxel.z};
    if (frame.contains(behind)) out.push_back(behind);
  }
  return out;
}

namespace {

// Support field over `frame` where each candidate contributes weight(n) as its
// probability of being occupied.
template <typename Weight>
ScalarField support_field(const GridFrame& frame, const Vec3& direction, bool opposite_lateral,
                          Weight&& weight) {
  ScalarField h(frame, 0.0);
  const Index3 lat = lateral_offset(direction);
  const Index3& d = frame.dims();
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        const Index3 i{x, y, z};
        if (z == 0) {
          h.at(i) = 1.0;
          continue;
        }
        double none = 1.0 - weight(frame.linear({x, y, z - 1}));
        const Index3 ahead{x + lat.x, y + lat.y, z};
        if (frame.contains(ahead)) none *= 1.0 - weight(frame.linear(ahead));
        if (opposite_lateral) {
          const Index3 behind{x - lat.x, y - lat.y, z};
          if (frame.contains(behind)) none *= 1.0 - weight(frame.linear(behind));
        }
        h.at(i) = 1.0 - none;
      }
    }
  }
  return h;
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double exceedance_from_moments(double mu, double var, CdfMode mode) {
  if (mode == CdfMode::Normal && var > 0.0) return normal_cdf(mu / std::sqrt(var));
  if (mu > 0.0) return 1.0;
  if (mu < 0.0) return 0.0;
  return 0.5;
}

// Horizontal moments of V in index units, centered on the grid middle so the
// sums of a binary grid stay exact.
struct Moments {
  double cx = 0, cy = 0;
  double m0 = 0, sx = 0, sy = 0;                   // sum V, sum V x, sum V y
  double w0 = 0, wx = 0, wy = 0, wxx = 0, wxy = 0, wyy = 0;  // same with V(1-V)

  explicit Moments(const ProbGrid& g) {
    const GridFrame& f = g.frame();
    cx = 0.5 * (f.dims().x - 1);
    cy = 0.5 * (f.dims().y - 1);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double v = g[n];
      if (v == 0.0) continue;
      const Index3 i = f.unlinear(n);
      const double x = i.x - cx;
      const double y = i.y - cy;
      m0 += v;
      sx += v * x;
      sy += v * y;
      const double w = v * (1.0 - v);
      if (w == 0.0) continue;
      w0 += w;
      wx += w * x;
      wy += w * y;
      wxx += w * x * x;
      wxy += w * x * y;
      wyy += w * y * y;
    }
    if (!(m0 > 0.0)) throw Error(ErrorCode::ZeroMass, "object grid has zero total mass");
  }

  double exceedance(const Index3& i, const Vec3& s, CdfMode mode) const {
    const double x = i.x - cx;
    const double y = i.y - cy;
    const double a = s.x();
    const double b = s.y();
    double mu = a * (x * m0 - sx) + b * (y * m0 - sy);
    const double vxx = x * x * w0 - 2.0 * x * wx + wxx;
    const double vxy = x * y * w0 - x * wy - y * wx + wxy;
    const double vyy = y * y * w0 - 2.0 * y * wy + wyy;
    double var = a * a * vxx + 2.0 * a * b * vxy + b * b * vyy;
    // Exact ties cancel only up to round-off (directions are not exact), so
    // snap residues relative to the magnitude of the cancelled terms.
    const double ax = std::abs(a), ay = std::abs(b);
    const double mu_scale = ax * (std::abs(x * m0) + std::abs(sx)) + ay * (std::abs(y * m0) + std::abs(sy));
    const double var_scale = (ax + ay) * (ax + ay) *
                             ((std::abs(x) + std::abs(y) + 1.0) * (std::abs(x) + std::abs(y) + 1.0) * w0 +
                              wxx + wyy + 2.0 * (std::abs(wx) + std::abs(wy)) * (std::abs(x) + std::abs(y) + 1.0));
    constexpr double kRoundOff = 64 * std::numeric_limits<double>::epsilon();
    if (std::abs(mu) <= kRoundOff * mu_scale) mu = 0.0;
    if (std::abs(var) <= kRoundOff * var_scale) var = 0.0;
    return exceedance_from_moments(mu, var, mode);
  }
};

// log of prod (1 - t) skipping exact ones, which are counted separately.
struct LogProduct {
  double log_sum = 0.0;
  std::size_t zeros = 0;

  void add(double t) {
    if (t >= 1.0) {
      ++zeros;
    } else {
      log_sum += std::log1p(-t);
    }
  }
};

}  // namespace

ScalarField support_prob(const ProbGrid& others, const Vec3& direction, bool opposite_lateral) {
  return support_field(others.frame(), direction, opposite_lateral,
                       [&](std::size_t n) { return others[n]; });
}

double com_exceedance_prob(const ProbGrid& object, const Index3& voxel, const Vec3& direction,
                           CdfMode mode) {
  if (!object.frame().contains(voxel)) {
    throw Error(ErrorCode::InvalidArgument, "voxel outside grid");
  }
  return Moments(object).exceedance(voxel, direction, mode);
}

ScalarField com_exceedance_field(const ProbGrid& object, const Vec3& direction, CdfMode mode) {
  const Moments m(object);
  ScalarField out(object.frame(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = m.exceedance(object.frame().unlinear(n), direction, mode);
  }
  return out;
}

double stability_log_prob(const ProbGrid& object, const ProbGrid& others,
                          const StabilityParams& params) {
  params.validate();
  require_same_frame(object.frame(), others.frame());
  const Moments moments(object);
  const DirectionSet dirs(params.n_directions);
  const GridFrame& f = object.frame();

  double total = 0.0;
  for (const Vec3& s : dirs.directions()) {
    const ScalarField h = support_prob(others, s, params.opposite_lateral);
    LogProduct unstable;
    for (std::size_t n = 0; n < f.size(); ++n) {
      if (object[n] == 0.0 || h[n] == 0.0) continue;
      unstable.add(object[n] * moments.exceedance(f.unlinear(n), s, params.cdf_mode) * h[n]);
    }
    const double stable = unstable.zeros > 0 ? 1.0 : -std::expm1(unstable.log_sum);
    total += std::log(std::max(stable, params.prob_clamp));
  }
  return total;
}

ScalarField stability_gradient(const ProbGrid& object, const ProbGrid& others,
                               const StabilityParams& params) {
  params.validate();
  require_same_frame(object.frame(), others.frame());
  const Moments moments(object);
  const DirectionSet dirs(params.n_directions);
  const GridFrame& f = object.frame();

  ScalarField grad(f, 0.0);
  std::vector<double> exceed(f.size());
  std::vector<double> pivot(f.size());  // P * 1{V >= 0.5} * h_hat
  for (const Vec3& s : dirs.directions()) {
    const ScalarField h_hat =
        support_field(f, s, params.opposite_lateral,
                      [&](std::size_t n) { return others[n] >= 0.5 ? 1.0 : 0.0; });
    LogProduct rest;
    for (std::size_t n = 0; n < f.size(); ++n) {
      exceed[n] = moments.exceedance(f.unlinear(n), s, params.cdf_mode);
      pivot[n] = object[n] >= 0.5 ? exceed[n] * h_hat[n] : 0.0;
      rest.add(pivot[n]);
    }
    for (std::size_t n = 0; n < f.size(); ++n) {
      const double lever = exceed[n] * h_hat[n];
      if (lever == 0.0) continue;
      // Product over every other voxel of (1 - pivot), as a log.
      double log_others;
      if (pivot[n] >= 1.0) {
        if (rest.zeros > 1) continue;
        log_others = rest.log_sum;
      } else {
        if (rest.zeros > 0) continue;
        log_others = rest.log_sum - std::log1p(-pivot[n]);
      }
      const double others_unstable = std::exp(log_others);
      const double stable = -std::expm1(log_others) + object[n] * lever * others_unstable;
      if (stable < params.prob_clamp) continue;
      grad[n] += lever * others_unstable / stable;
    }
  }
  return grad;
}

EquilibriumReport check_static_equilibrium(const BinaryGrid& shape, const BinaryGrid& support,
                                           const StabilityParams& params) {
  params.validate();
  require_same_frame(shape.frame(), support.frame());
  const GridFrame& f = shape.frame();

  std::int64_t count = 0, sum_x = 0, sum_y = 0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (!shape[n]) continue;
    const Index3 i = f.unlinear(n);
    ++count;
    sum_x += i.x;
    sum_y += i.y;
  }
  if (count == 0) throw Error(ErrorCode::EmptyShape, "equilibrium check on an empty shape");

  const DirectionSet dirs(params.n_directions);
  EquilibriumReport report;
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const Vec3& s = dirs[j];
    bool pivoted = false;
    for (std::size_t n = 0; n < f.size() && !pivoted; ++n) {
      if (!shape[n]) continue;
      const Index3 i = f.unlinear(n);
      // (i - M) . s scaled by the voxel count; integer offsets keep ties exact.
      const double ahead = s.x() * static_cast<double>(count * i.x - sum_x) +
                           s.y() * static_cast<double>(count * i.y - sum_y);
      if (ahead < 0.0) continue;
      bool supported = i.z == 0;
      for (const Index3& c : support_candidates(f, i, s, params.opposite_lateral)) {
        if (supported) break;
        supported = support.at(c) != 0;
      }
      pivoted = supported;
    }
    if (!pivoted) {
      report.failing_directions.push_back(static_cast<int>(j));
      report.failing_vectors.push_back(s);
    }
  }
  report.stable = report.failing_directions.empty();
  return report;
}

}  // namespace voxprior
