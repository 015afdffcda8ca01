// SPDX-License-Identifier: Apache-2.0

#include "voxprior/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>

namespace voxprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double Path::prob() const { return std::exp(log_prob); }

bool Path::contains(const Index3& v) const {
  return std::find(voxels.begin(), voxels.end(), v) != voxels.end();
}

void ConnectivityParams::validate() const {
  if (coarsen_factor < 1) throw Error(ErrorCode::InvalidArgument, "coarsen factor must be >= 1");
  if (!(anchor_threshold > 0.0 && anchor_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "anchor threshold must lie in (0, 1)");
  }
  if (!(prob_clamp >= 0.0 && prob_clamp < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "path clamp must lie in [0, 1)");
  }
}

double clamped_log(double v, double prob_clamp) {
  const double p = std::max(v, prob_clamp);
  return p > 0.0 ? std::log(p) : -kInf;
}

PathTree::PathTree(const ProbGrid& grid, const Index3& source, double prob_clamp)
    : frame_(grid.frame()),
      source_(source),
      cost_(grid.size(), kInf),
      parent_(grid.size(), -1) {
  if (!frame_.contains(source)) throw Error(ErrorCode::InvalidArgument, "path source outside grid");
  std::vector<double> step(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) step[n] = -clamped_log(grid[n], prob_clamp);

  const std::size_t s = frame_.linear(source);
  if (step[s] == kInf) return;

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::vector<std::uint8_t> settled(grid.size(), 0);
  cost_[s] = step[s];
  open.emplace(cost_[s], s);
  const auto offsets = neighbor_offsets(Neighborhood::TwentySix);
  while (!open.empty()) {
    const auto [c, u] = open.top();
    open.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    const Index3 ui = frame_.unlinear(u);
    for (const Index3& o : offsets) {
      const Index3 vi{ui.x + o.x, ui.y + o.y, ui.z + o.z};
      if (!frame_.contains(vi)) continue;
      const std::size_t v = frame_.linear(vi);
      if (settled[v] || step[v] == kInf) continue;
      const double nc = c + step[v];
      const auto pu = static_cast<std::int64_t>(u);
      if (nc < cost_[v] || (nc == cost_[v] && pu < parent_[v])) {
        cost_[v] = nc;
        parent_[v] = pu;
        open.emplace(nc, v);
      }
    }
  }
}

bool PathTree::reachable(const Index3& target) const {
  return frame_.contains(target) && cost_[frame_.linear(target)] < kInf;
}

double PathTree::log_prob(const Index3& target) const {
  if (!frame_.contains(target)) throw Error(ErrorCode::InvalidArgument, "path target outside grid");
  return -cost_[frame_.linear(target)];
}

std::vector<Index3> PathTree::voxels_to(const Index3& target) const {
  if (!reachable(target)) throw Error(ErrorCode::Unreachable, "no path between the voxels");
  std::vector<Index3> out;
  for (auto n = static_cast<std::int64_t>(frame_.linear(target)); n >= 0;
       n = parent_[static_cast<std::size_t>(n)]) {
    out.push_back(frame_.unlinear(static_cast<std::size_t>(n)));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Path PathTree::path_to(const Index3& target) const {
  return Path{voxels_to(target), log_prob(target)};
}

namespace {

void require_voxel(const GridFrame& f, const Index3& v) {
  if (!f.contains(v)) throw Error(ErrorCode::InvalidArgument, "voxel outside grid");
}

// t^c from the trees rooted at a and at b. Voxels shared by both legs enter
// the product once. `stamp`/`mark` is scratch space sized to the grid.
double through_log_prob(const GridFrame& f, const std::vector<double>& logv, const PathTree& from_a,
                        const PathTree& from_b, const Index3& c, std::vector<std::uint32_t>& mark,
                        std::uint32_t stamp, std::vector<Index3>* voxels) {
  if (!from_a.reachable(c) || !from_b.reachable(c)) return -kInf;
  const std::vector<Index3> first = from_a.voxels_to(c);
  std::vector<Index3> second = from_b.voxels_to(c);
  std::reverse(second.begin(), second.end());
  double lp = 0.0;
  for (const Index3& v : first) {
    const std::size_t n = f.linear(v);
    if (mark[n] == stamp) continue;
    mark[n] = stamp;
    lp += logv[n];
  }
  for (const Index3& v : second) {
    const std::size_t n = f.linear(v);
    if (mark[n] == stamp) continue;
    mark[n] = stamp;
    lp += logv[n];
  }
  if (voxels) {
    *voxels = first;
    voxels->insert(voxels->end(), second.begin() + 1, second.end());
  }
  return lp;
}

std::vector<double> log_field(const ProbGrid& g, double prob_clamp) {
  std::vector<double> out(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = clamped_log(g[n], prob_clamp);
  return out;
}

// log[q P + 1 - q] for q = V(a)V(b), given log P.
double pair_term(double q, double log_p) {
  if (q >= 1.0) return log_p;
  return std::log1p(q * std::expm1(log_p));
}

}  // namespace

Path most_likely_path(const ProbGrid& grid, const Index3& a, const Index3& b, double prob_clamp) {
  require_voxel(grid.frame(), b);
  return PathTree(grid, a, prob_clamp).path_to(b);
}

Path most_likely_path_through(const ProbGrid& grid, const Index3& a, const Index3& b,
                              const Index3& c, double prob_clamp) {
  const GridFrame& f = grid.frame();
  require_voxel(f, b);
  require_voxel(f, c);
  const PathTree from_a(grid, a, prob_clamp);
  Path best = from_a.path_to(b);
  if (best.contains(c)) return best;
  const PathTree from_b(grid, b, prob_clamp);
  std::vector<std::uint32_t> mark(grid.size(), 0);
  Path out;
  out.log_prob =
      through_log_prob(f, log_field(grid, prob_clamp), from_a, from_b, c, mark, 1, &out.voxels);
  if (out.log_prob == -kInf) throw Error(ErrorCode::Unreachable, "no path through the voxel");
  return out;
}

double pair_connect_prob(const ProbGrid& grid, const Index3& a, const Index3& b,
                         const std::optional<Index3>& c, double prob_clamp) {
  const Path best = most_likely_path(grid, a, b, prob_clamp);
  if (!c || best.contains(*c)) return best.prob();
  const Path through = most_likely_path_through(grid, a, b, *c, prob_clamp);
  return 1.0 - (1.0 - best.prob()) * (1.0 - through.prob());
}

std::vector<Index3> connectivity_anchors(const ProbGrid& coarse, const ConnectivityParams& params) {
  std::vector<Index3> anchors;
  for (std::size_t n = 0; n < coarse.size(); ++n) {
    const bool take = params.all_pairs ? coarse[n] > 0.0 : coarse[n] >= params.anchor_threshold;
    if (take) anchors.push_back(coarse.frame().unlinear(n));
  }
  return anchors;
}

double connectivity_log_prob(const ProbGrid& grid, const ConnectivityParams& params) {
  params.validate();
  const ProbGrid coarse = coarsen(grid, params.coarsen_factor);
  const std::vector<Index3> anchors = connectivity_anchors(coarse, params);
  if (anchors.empty()) throw Error(ErrorCode::NoAnchors, "no voxel reaches the anchor threshold");

  double total = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const PathTree tree(coarse, anchors[i], params.prob_clamp);
    const double va = coarse.at(anchors[i]);
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      total += pair_term(va * coarse.at(anchors[j]), tree.log_prob(anchors[j]));
    }
  }
  return total;
}

ScalarField connectivity_gradient(const ProbGrid& grid, const BinaryGrid& occluded,
                                  const ConnectivityParams& params) {
  params.validate();
  require_same_frame(grid.frame(), occluded.frame());
  const int factor = params.coarsen_factor;
  const ProbGrid coarse = coarsen(grid, factor);
  const GridFrame& cf = coarse.frame();
  const std::vector<Index3> anchors = connectivity_anchors(coarse, params);
  if (anchors.empty()) throw Error(ErrorCode::NoAnchors, "no voxel reaches the anchor threshold");

  BinaryGrid coarse_occluded(cf, 0);
  for (std::size_t n = 0; n < occluded.size(); ++n) {
    if (!occluded[n]) continue;
    const Index3 i = grid.frame().unlinear(n);
    coarse_occluded.at({i.x / factor, i.y / factor, i.z / factor}) = 1;
  }
  std::vector<std::size_t> targets;
  for (std::size_t n = 0; n < cf.size(); ++n) {
    if (coarse_occluded[n]) targets.push_back(n);
  }

  ScalarField coarse_grad(cf, 0.0);
  if (!targets.empty()) {
    const std::vector<double> logv = log_field(coarse, params.prob_clamp);
    std::vector<PathTree> trees;
    trees.reserve(anchors.size());
    for (const Index3& a : anchors) trees.emplace_back(coarse, a, params.prob_clamp);

    std::vector<std::uint32_t> on_best(cf.size(), 0);
    std::vector<std::uint32_t> mark(cf.size(), 0);
    std::uint32_t pair_stamp = 0;
    std::uint32_t stamp = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      for (std::size_t j = i + 1; j < anchors.size(); ++j) {
        const std::size_t an = cf.linear(anchors[i]);
        const std::size_t bn = cf.linear(anchors[j]);
        const double q = coarse[an] * coarse[bn];
        const double log_best = trees[i].log_prob(anchors[j]);
        const double p_best = std::exp(log_best);
        ++pair_stamp;
        if (log_best > -kInf) {
          for (const Index3& v : trees[i].voxels_to(anchors[j])) on_best[cf.linear(v)] = pair_stamp;
        }
        for (std::size_t c : targets) {
          if (c == an || c == bn) continue;
          double dp;
          double p_union;
          if (on_best[c] == pair_stamp) {
            dp = std::exp(log_best - logv[c]);
            p_union = p_best;
          } else {
            const double log_through = through_log_prob(cf, logv, trees[i], trees[j],
                                                        cf.unlinear(c), mark, ++stamp, nullptr);
            if (log_through == -kInf) continue;
            const double p_through = std::exp(log_through);
            dp = std::exp(log_through - logv[c]) * (1.0 - p_best);
            p_union = 1.0 - (1.0 - p_best) * (1.0 - p_through);
          }
          coarse_grad[c] += q * dp / (q * p_union + 1.0 - q);
        }
      }
    }
  }

  ScalarField grad(grid.frame(), 0.0);
  for (std::size_t n = 0; n < grad.size(); ++n) {
    if (!occluded[n]) continue;
    const Index3 i = grid.frame().unlinear(n);
    grad[n] = coarse_grad.at({i.x / factor, i.y / factor, i.z / factor});
  }
  return grad;
}

}  // namespace voxprior
