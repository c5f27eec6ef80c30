#ifndef TWA_SCHEDULE_HPP
#define TWA_SCHEDULE_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace twa {

/// One thread's share of a phase.
template <class Id>
struct WorkQueue {
  std::vector<Id> nodes;
  std::size_t cost = 0;
};

/// Greedy longest-processing-time partition: nodes sorted by descending cost
/// (stable, so equal costs keep input order) and each placed on the queue
/// with the smallest running total, lowest index on ties.
template <class Id>
std::vector<WorkQueue<Id>> schedule(std::span<const Id> nodes, std::span<const std::size_t> costs,
                                    std::size_t thread_count) {
  if (thread_count == 0) thread_count = 1;
  std::vector<WorkQueue<Id>> queues(thread_count);
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return costs[a] > costs[b]; });
  for (std::size_t i : order) {
    auto it = std::min_element(queues.begin(), queues.end(), [](const auto& a, const auto& b) {
      return a.cost < b.cost || (a.cost == b.cost && a.nodes.size() < b.nodes.size());
    });
    it->nodes.push_back(nodes[i]);
    it->cost += costs[i];
  }
  for (auto& q : queues) std::sort(q.nodes.begin(), q.nodes.end());
  return queues;
}

}  // namespace twa

#endif  // TWA_SCHEDULE_HPP
