#ifndef TWA_PACKING_MAINTENANCE_HPP
#define TWA_PACKING_MAINTENANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "twa/engine.hpp"
#include "twa/packing/factors.hpp"
#include "twa/packing/instance.hpp"
#include "twa/rtree.hpp"

namespace twa::packing {

struct OverlapReport {
  std::int64_t circle = -1;  // -1 when no circle overlaps another
  double depth = 0.0;        // 2r minus the circle's nearest center distance

  bool operator==(const OverlapReport&) const = default;
};

/// Circle with the deepest pairwise penetration. `tree` must hold, for every
/// circle id, a box containing that circle.
inline OverlapReport max_overlap(const std::vector<Point>& p, double radius, const RTree<2>& tree) {
  OverlapReport best;
  const double target = 2.0 * radius;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Aabb q = Aabb::around({p[i].x, p[i].y}, radius);
    double nearest = target;
    tree.visit(q, [&](std::uint64_t j, const Aabb&) {
      if (j == i) return;
      nearest = std::min(nearest, std::hypot(p[i].x - p[j].x, p[i].y - p[j].y));
    });
    const double depth = target - nearest;
    if (depth > best.depth) best = {static_cast<std::int64_t>(i), depth};
  }
  return best;
}

/// Keeps exactly one pair factor per pair of circles whose buffered boxes
/// intersect.
///
/// Each iteration: refresh every circle's box (inflated on each side by
/// buffer_fraction of the diameter), query intersecting pairs, keep pair
/// factors that are still needed, detach the others into a pool (their four
/// edges removed), and attach a factor for each new pair, reparameterizing a
/// pooled one when available and creating one otherwise.
class PairMaintenance final : public GlobalReasoner {
 public:
  PairMaintenance(const PackingModel& model, std::uint64_t seed = 0, double rho = 1.0)
      : model_(&model), seed_(seed), rho_(rho) {}

  [[nodiscard]] std::string name() const override { return "pair-maintenance"; }

  void reason(GlobalContext& ctx) override {
    const FactorGraph& g = ctx.graph();
    const double r = model_->instance.radius;
    const double half = r + model_->instance.buffer_fraction * 2.0 * r;
    const std::size_t n = model_->size();

    positions_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const CircleVars& c = model_->circles[i];
      if (!g.contains(c.x) || !g.contains(c.y)) {
        if (tree_.contains(i)) tree_.remove(i);
        continue;
      }
      positions_[i] = {g.variable(c.x).value, g.variable(c.y).value};
      tree_.upsert(i, Aabb::around({positions_[i].x, positions_[i].y}, half));
    }

    const auto pairs = tree_.query_pairs();
    std::unordered_set<std::uint64_t> touched;
    touched.reserve(pairs.size() * 2);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> additions;
    for (const auto& pr : pairs) {
      const std::uint64_t k = key(pr.first, pr.second);
      if (active_.count(k)) {
        touched.insert(k);
      } else {
        additions.push_back(pr);
      }
    }

    std::vector<std::uint64_t> dropped;
    for (const auto& [k, f] : active_) {
      if (!touched.count(k)) dropped.push_back(k);
    }
    std::sort(dropped.begin(), dropped.end());
    for (std::uint64_t k : dropped) {
      const FactorId f = active_.at(k);
      for (EdgeId e : g.factor(f).edges) ctx.queue(edit::RemoveEdge{e});
      active_.erase(k);
      pool_.push_back(f);
    }

    last_added_ = 0;
    pending_.clear();
    for (const auto& [i, j] : additions) {
      auto params = std::make_unique<PairFactor>(r, i, j, seed_, rho_);
      const CircleVars& a = model_->circles[i];
      const CircleVars& b = model_->circles[j];
      if (!pool_.empty()) {
        const FactorId f = pool_.back();
        pool_.pop_back();
        ctx.queue(edit::Reparameterize{f, std::move(params)});
        for (VariableId v : {a.x, a.y, b.x, b.y}) ctx.queue(edit::AddEdge{f, v});
        active_[key(i, j)] = f;
        ++reused_;
      } else {
        ctx.queue(edit::AddFactor{std::move(params), {a.x, a.y, b.x, b.y}});
        pending_.push_back(key(i, j));
      }
      ++last_added_;
    }
    last_removed_ = dropped.size();

    overlap_ = max_overlap(positions_, r, tree_);
  }

  void edits_applied(const EditReport& report) override {
    for (std::size_t k = 0; k < pending_.size() && k < report.added_factors.size(); ++k) {
      active_[pending_[k]] = report.added_factors[k];
      ++created_;
    }
    pending_.clear();
    peak_active_ = std::max(peak_active_, active_.size());
  }

  [[nodiscard]] std::size_t active_factors() const { return active_.size(); }
  [[nodiscard]] std::size_t pool_size() const { return pool_.size(); }
  [[nodiscard]] std::size_t peak_active() const { return std::max(peak_active_, active_.size()); }
  [[nodiscard]] std::size_t created() const { return created_; }
  [[nodiscard]] std::size_t reused() const { return reused_; }
  [[nodiscard]] std::size_t last_added() const { return last_added_; }
  [[nodiscard]] std::size_t last_removed() const { return last_removed_; }
  [[nodiscard]] const OverlapReport& overlap() const { return overlap_; }
  [[nodiscard]] const RTree<2>& tree() const { return tree_; }
  /// Centers read at the last maintenance pass.
  [[nodiscard]] const std::vector<Point>& positions() const { return positions_; }

  /// Active pair factor for circles (i, j), if any.
  [[nodiscard]] std::optional<FactorId> factor_for(std::uint64_t i, std::uint64_t j) const {
    auto it = active_.find(key(std::min(i, j), std::max(i, j)));
    if (it == active_.end()) return std::nullopt;
    return it->second;
  }
  [[nodiscard]] const std::vector<FactorId>& pool() const { return pool_; }

 private:
  [[nodiscard]] std::uint64_t key(std::uint64_t i, std::uint64_t j) const {
    return i * static_cast<std::uint64_t>(model_->size()) + j;
  }

  const PackingModel* model_;
  std::uint64_t seed_;
  double rho_;
  RTree<2> tree_;
  std::vector<Point> positions_;
  std::unordered_map<std::uint64_t, FactorId> active_;
  std::vector<FactorId> pool_;
  std::vector<std::uint64_t> pending_;
  std::size_t created_ = 0;
  std::size_t reused_ = 0;
  std::size_t peak_active_ = 0;
  std::size_t last_added_ = 0;
  std::size_t last_removed_ = 0;
  OverlapReport overlap_;
};

}  // namespace twa::packing

#endif  // TWA_PACKING_MAINTENANCE_HPP
