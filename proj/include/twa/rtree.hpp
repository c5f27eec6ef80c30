#ifndef TWA_RTREE_HPP
#define TWA_RTREE_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "twa/errors.hpp"

namespace twa {

/// Axis-aligned box with closed intervals.
template <std::size_t D>
struct Box {
  std::array<double, D> lo{};
  std::array<double, D> hi{};

  [[nodiscard]] bool valid() const {
    for (std::size_t k = 0; k < D; ++k) {
      if (!(lo[k] <= hi[k])) return false;
    }
    return true;
  }
  [[nodiscard]] bool intersects(const Box& o) const {
    for (std::size_t k = 0; k < D; ++k) {
      if (hi[k] < o.lo[k] || o.hi[k] < lo[k]) return false;
    }
    return true;
  }
  [[nodiscard]] bool contains(const Box& o) const {
    for (std::size_t k = 0; k < D; ++k) {
      if (o.lo[k] < lo[k] || hi[k] < o.hi[k]) return false;
    }
    return true;
  }
  [[nodiscard]] double volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < D; ++k) v *= hi[k] - lo[k];
    return v;
  }
  [[nodiscard]] Box merged(const Box& o) const {
    Box b;
    for (std::size_t k = 0; k < D; ++k) {
      b.lo[k] = std::min(lo[k], o.lo[k]);
      b.hi[k] = std::max(hi[k], o.hi[k]);
    }
    return b;
  }
  /// Box around a ball of radius `r` centered at `c`.
  static Box around(const std::array<double, D>& c, double r) {
    Box b;
    for (std::size_t k = 0; k < D; ++k) {
      b.lo[k] = c[k] - r;
      b.hi[k] = c[k] + r;
    }
    return b;
  }

  bool operator==(const Box&) const = default;
};

using Aabb = Box<2>;

/// Dynamic r-tree keyed by integer ids, quadratic split.
template <std::size_t D = 2>
class RTree {
 public:
  using Key = std::uint64_t;
  using BoxT = Box<D>;

  static constexpr std::size_t kMinFanout = 2;
  static constexpr std::size_t kMaxFanout = 8;

  RTree() { clear(); }

  void clear() {
    nodes_.clear();
    free_.clear();
    where_.clear();
    root_ = new_node(true);
  }

  [[nodiscard]] std::size_t size() const { return where_.size(); }
  [[nodiscard]] bool empty() const { return where_.empty(); }
  [[nodiscard]] bool contains(Key id) const { return where_.count(id) != 0; }

  [[nodiscard]] const BoxT& box(Key id) const {
    auto it = where_.find(id);
    if (it == where_.end()) throw UnknownId(missing(id));
    const Node& leaf = nodes_[it->second];
    return leaf.slots[slot_of(leaf, id)].box;
  }

  /// Inserts `id` or moves it to `b`.
  void upsert(Key id, const BoxT& b) {
    if (!b.valid()) throw InvalidConfig("r-tree: box with min > max");
    auto it = where_.find(id);
    if (it != where_.end()) {
      Node& leaf = nodes_[it->second];
      if (leaf.box.contains(b)) {
        leaf.slots[slot_of(leaf, id)].box = b;
        tighten_upward(it->second);
        return;
      }
      remove(id);
    }
    insert_leaf_slot(Slot{b, id});
  }

  void remove(Key id) {
    auto it = where_.find(id);
    if (it == where_.end()) throw UnknownId(missing(id));
    const int leaf = it->second;
    where_.erase(it);
    Node& n = nodes_[leaf];
    n.slots.erase(n.slots.begin() + static_cast<std::ptrdiff_t>(slot_of(n, id)));
    condense(leaf);
  }

  /// Ids whose boxes intersect `q`, ascending.
  [[nodiscard]] std::vector<Key> query(const BoxT& q) const {
    std::vector<Key> out;
    visit(q, [&](Key k, const BoxT&) { out.push_back(k); });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Calls fn(key, box) for every entry intersecting `q`.
  template <class Fn>
  void visit(const BoxT& q, Fn&& fn) const {
    if (where_.empty()) return;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      for (const Slot& s : n.slots) {
        if (!s.box.intersects(q)) continue;
        if (n.leaf) {
          fn(s.ref, s.box);
        } else {
          stack.push_back(static_cast<int>(s.ref));
        }
      }
    }
  }

  /// All unordered pairs (a < b) with intersecting boxes, sorted.
  [[nodiscard]] std::vector<std::pair<Key, Key>> query_pairs() const {
    std::vector<std::pair<Key, Key>> out;
    for (const Node& n : nodes_) {
      if (!n.live || !n.leaf) continue;
      for (const Slot& s : n.slots) {
        visit(s.box, [&](Key k, const BoxT&) {
          if (s.ref < k) out.emplace_back(s.ref, k);
        });
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Structural check: fanout bounds, parent boxes covering children, equal
  /// leaf depth, id index consistency. Returns problems (empty if sound).
  [[nodiscard]] std::vector<std::string> check_invariants() const {
    std::vector<std::string> problems;
    int leaf_depth = -1;
    std::size_t entries = 0;
    auto report = [&](const std::string& s) { problems.push_back(s); };
    std::vector<std::pair<int, int>> stack{{root_, 0}};
    while (!stack.empty()) {
      const auto [idx, depth] = stack.back();
      stack.pop_back();
      const Node& n = nodes_[idx];
      if (!n.live) report("dead node reachable");
      const std::size_t k = n.slots.size();
      if (k > kMaxFanout) report("node over max fanout");
      if (idx != root_ && k < kMinFanout) report("non-root node under min fanout");
      if (idx == root_ && !n.leaf && k < 2) report("internal root with fewer than 2 children");
      for (const Slot& s : n.slots) {
        if (!n.box.contains(s.box)) report("node box does not contain an entry");
        if (n.leaf) {
          ++entries;
          auto it = where_.find(s.ref);
          if (it == where_.end() || it->second != idx) report("id index out of sync");
        } else {
          const Node& c = nodes_[s.ref];
          if (c.parent != idx) report("child parent link broken");
          if (!(c.box == s.box)) report("stored child box stale");
          stack.emplace_back(static_cast<int>(s.ref), depth + 1);
        }
      }
      if (n.leaf) {
        if (leaf_depth < 0) leaf_depth = depth;
        if (leaf_depth != depth) report("leaves at different depths");
      }
    }
    if (entries != where_.size()) report("entry count differs from id index");
    return problems;
  }

  [[nodiscard]] int height() const {
    int h = 1;
    for (int i = root_; !nodes_[i].leaf; i = static_cast<int>(nodes_[i].slots.front().ref)) ++h;
    return h;
  }

 private:
  struct Slot {
    BoxT box;
    Key ref;  // id in leaves, node index otherwise
  };
  struct Node {
    BoxT box;
    bool leaf = true;
    bool live = true;
    int parent = -1;
    std::vector<Slot> slots;
  };

  static std::string missing(Key id) {
    std::ostringstream os;
    os << "r-tree: unknown id " << id;
    return os.str();
  }

  static std::size_t slot_of(const Node& n, Key ref) {
    for (std::size_t i = 0; i < n.slots.size(); ++i) {
      if (n.slots[i].ref == ref) return i;
    }
    return n.slots.size();
  }

  int new_node(bool leaf) {
    int idx;
    if (!free_.empty()) {
      idx = free_.back();
      free_.pop_back();
      nodes_[idx] = Node{};
    } else {
      idx = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
    }
    nodes_[idx].leaf = leaf;
    return idx;
  }

  void free_node(int idx) {
    nodes_[idx].live = false;
    nodes_[idx].slots.clear();
    free_.push_back(idx);
  }

  static BoxT bounds(const std::vector<Slot>& slots) {
    BoxT b = slots.front().box;
    for (const Slot& s : slots) b = b.merged(s.box);
    return b;
  }

  void recompute(int idx) {
    Node& n = nodes_[idx];
    if (!n.slots.empty()) n.box = bounds(n.slots);
    if (n.parent >= 0) {
      Node& p = nodes_[n.parent];
      p.slots[slot_of(p, static_cast<Key>(idx))].box = n.box;
    }
  }

  void tighten_upward(int idx) {
    for (int i = idx; i >= 0; i = nodes_[i].parent) recompute(i);
  }

  int choose_leaf(const BoxT& b) const {
    int idx = root_;
    while (!nodes_[idx].leaf) {
      const Node& n = nodes_[idx];
      std::size_t best = 0;
      double best_grow = std::numeric_limits<double>::infinity();
      double best_vol = best_grow;
      for (std::size_t i = 0; i < n.slots.size(); ++i) {
        const double vol = n.slots[i].box.volume();
        const double grow = n.slots[i].box.merged(b).volume() - vol;
        if (grow < best_grow || (grow == best_grow && vol < best_vol)) {
          best = i;
          best_grow = grow;
          best_vol = vol;
        }
      }
      idx = static_cast<int>(n.slots[best].ref);
    }
    return idx;
  }

  void insert_leaf_slot(Slot s) {
    const int leaf = choose_leaf(s.box);
    Node& n = nodes_[leaf];
    if (n.slots.empty()) n.box = s.box;
    n.slots.push_back(s);
    where_[s.ref] = leaf;
    handle_overflow(leaf);
  }

  void handle_overflow(int idx) {
    while (true) {
      if (nodes_[idx].slots.size() <= kMaxFanout) {
        tighten_upward(idx);
        return;
      }
      const int sibling = split(idx);
      const int parent = nodes_[idx].parent;
      if (parent < 0) {
        const int root = new_node(false);
        nodes_[root].slots.push_back(Slot{nodes_[idx].box, static_cast<Key>(idx)});
        nodes_[root].slots.push_back(Slot{nodes_[sibling].box, static_cast<Key>(sibling)});
        nodes_[root].box = nodes_[idx].box.merged(nodes_[sibling].box);
        nodes_[idx].parent = root;
        nodes_[sibling].parent = root;
        root_ = root;
        return;
      }
      Node& p = nodes_[parent];
      p.slots[slot_of(p, static_cast<Key>(idx))].box = nodes_[idx].box;
      p.slots.push_back(Slot{nodes_[sibling].box, static_cast<Key>(sibling)});
      nodes_[sibling].parent = parent;
      idx = parent;
    }
  }

  // Quadratic split of an overfull node; returns the new sibling.
  int split(int idx) {
    std::vector<Slot> all = std::move(nodes_[idx].slots);
    nodes_[idx].slots.clear();
    const bool leaf = nodes_[idx].leaf;

    std::size_t sa = 0, sb = 1;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        const double waste = all[i].box.merged(all[j].box).volume() - all[i].box.volume() -
                             all[j].box.volume();
        if (waste > worst) {
          worst = waste;
          sa = i;
          sb = j;
        }
      }
    }
    std::vector<Slot> ga{all[sa]};
    std::vector<Slot> gb{all[sb]};
    BoxT ba = all[sa].box;
    BoxT bb = all[sb].box;
    std::vector<Slot> rest;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (i != sa && i != sb) rest.push_back(all[i]);
    }
    while (!rest.empty()) {
      if (ga.size() + rest.size() == kMinFanout) {
        for (const Slot& s : rest) { ga.push_back(s); ba = ba.merged(s.box); }
        break;
      }
      if (gb.size() + rest.size() == kMinFanout) {
        for (const Slot& s : rest) { gb.push_back(s); bb = bb.merged(s.box); }
        break;
      }
      std::size_t pick = 0;
      double best_diff = -1.0;
      double da_pick = 0.0, db_pick = 0.0;
      for (std::size_t i = 0; i < rest.size(); ++i) {
        const double da = ba.merged(rest[i].box).volume() - ba.volume();
        const double db = bb.merged(rest[i].box).volume() - bb.volume();
        const double diff = std::abs(da - db);
        if (diff > best_diff) {
          best_diff = diff;
          pick = i;
          da_pick = da;
          db_pick = db;
        }
      }
      bool to_a;
      if (da_pick != db_pick) {
        to_a = da_pick < db_pick;
      } else if (ba.volume() != bb.volume()) {
        to_a = ba.volume() < bb.volume();
      } else {
        to_a = ga.size() <= gb.size();
      }
      if (to_a) {
        ba = ba.merged(rest[pick].box);
        ga.push_back(rest[pick]);
      } else {
        bb = bb.merged(rest[pick].box);
        gb.push_back(rest[pick]);
      }
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    const int sib = new_node(leaf);
    nodes_[idx].slots = std::move(ga);
    nodes_[idx].box = ba;
    nodes_[sib].slots = std::move(gb);
    nodes_[sib].box = bb;
    for (const Slot& s : nodes_[sib].slots) {
      if (leaf) {
        where_[s.ref] = sib;
      } else {
        nodes_[s.ref].parent = sib;
      }
    }
    return sib;
  }

  void collect_entries(int idx, std::vector<Slot>& out) {
    Node& n = nodes_[idx];
    if (n.leaf) {
      out.insert(out.end(), n.slots.begin(), n.slots.end());
    } else {
      for (const Slot& s : n.slots) collect_entries(static_cast<int>(s.ref), out);
    }
    free_node(idx);
  }

  void condense(int idx) {
    std::vector<Slot> orphans;
    while (idx != root_) {
      const int parent = nodes_[idx].parent;
      if (nodes_[idx].slots.size() < kMinFanout) {
        Node& p = nodes_[parent];
        p.slots.erase(p.slots.begin() + static_cast<std::ptrdiff_t>(slot_of(p, static_cast<Key>(idx))));
        collect_entries(idx, orphans);
      } else {
        recompute(idx);
      }
      idx = parent;
    }
    while (!nodes_[root_].leaf && nodes_[root_].slots.size() == 1) {
      const int child = static_cast<int>(nodes_[root_].slots.front().ref);
      free_node(root_);
      root_ = child;
      nodes_[root_].parent = -1;
    }
    if (!nodes_[root_].leaf && nodes_[root_].slots.empty()) nodes_[root_].leaf = true;
    if (!nodes_[root_].slots.empty()) nodes_[root_].box = bounds(nodes_[root_].slots);
    for (const Slot& s : orphans) {
      where_.erase(s.ref);
      insert_leaf_slot(s);
    }
  }

  std::vector<Node> nodes_;
  std::vector<int> free_;
  std::unordered_map<Key, int> where_;
  int root_ = 0;
};

}  // namespace twa

#endif  // TWA_RTREE_HPP
