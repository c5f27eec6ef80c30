#ifndef TWA_PACKING_STEERING_HPP
#define TWA_PACKING_STEERING_HPP

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "twa/engine.hpp"
#include "twa/factor.hpp"
#include "twa/packing/instance.hpp"
#include "twa/packing/maintenance.hpp"

namespace twa::packing {

namespace cmd {
struct DragStart {
  std::int64_t id = 0;
  bool operator==(const DragStart&) const = default;
};
struct DragMove {
  std::int64_t id = 0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const DragMove&) const = default;
};
struct DragEnd {
  std::int64_t id = 0;
  bool operator==(const DragEnd&) const = default;
};
struct Vacancy {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vacancy&) const = default;
};
struct Pause {
  bool operator==(const Pause&) const = default;
};
struct Resume {
  bool operator==(const Resume&) const = default;
};
struct SetParam {
  std::string key;
  double value = 0.0;
  bool operator==(const SetParam&) const = default;
};
}  // namespace cmd

using Command = std::variant<cmd::DragStart, cmd::DragMove, cmd::DragEnd, cmd::Vacancy, cmd::Pause,
                             cmd::Resume, cmd::SetParam>;

/// Local reasoner attached to one circle's (x, y) while it is being steered.
/// Silent (zero weight) unless an emission is set.
class SteerFactor final : public LocalReasoner {
 public:
  [[nodiscard]] std::string_view kind() const override { return "steer"; }
};

struct SteeringParams {
  double drag_weight = 1.0;
  long transport_burst = 25;
};

/// Multi-producer command inbox drained by the solver thread.
class CommandQueue {
 public:
  void push(Command c) {
    std::lock_guard lock(mu_);
    q_.push_back(std::move(c));
  }
  std::vector<Command> drain() {
    std::lock_guard lock(mu_);
    std::vector<Command> out(std::make_move_iterator(q_.begin()), std::make_move_iterator(q_.end()));
    q_.clear();
    return out;
  }
  [[nodiscard]] bool empty() const {
    std::lock_guard lock(mu_);
    return q_.empty();
  }

 private:
  mutable std::mutex mu_;
  std::deque<Command> q_;
};

/// Applies queued drag and vacancy commands inside the global section.
///
/// A drag attaches a steer factor to the circle that pulls it toward the
/// cursor with standard weight drag_weight, and detaches it on release. A
/// vacancy picks the circle with the largest overlap (from the maintenance
/// reasoner registered before this one) and pulls it toward the point for
/// transport_burst iterations.
class SteeringReasoner final : public GlobalReasoner {
 public:
  SteeringReasoner(const PackingModel& model, const PairMaintenance* maintenance,
                   std::shared_ptr<CommandQueue> queue, SteeringParams params = {})
      : model_(&model), maintenance_(maintenance), queue_(std::move(queue)), params_(params) {}

  [[nodiscard]] std::string name() const override { return "steering"; }

  void reason(GlobalContext& ctx) override {
    const FactorGraph& g = ctx.graph();
    pending_.clear();
    // factors released before their id was known
    std::erase_if(orphans_, [&](const Handle& h) {
      if (!h->valid()) return false;
      ctx.queue(edit::RemoveFactor{*h});
      return true;
    });
    for (Command& c : queue_->drain()) {
      std::visit([&](auto& v) { apply(ctx, g, v); }, c);
    }
    if (transport_ && transport_->factor->valid()) {
      if (--transport_->remaining <= 0) {
        ctx.queue(edit::RemoveFactor{*transport_->factor});
        transport_.reset();
      } else {
        emit(ctx, *transport_->factor, transport_->circle, transport_->target);
      }
    }
  }

  void edits_applied(const EditReport& report) override {
    for (std::size_t k = 0; k < pending_.size() && k < report.added_factors.size(); ++k) {
      *pending_[k] = report.added_factors[k];
    }
    pending_.clear();
  }

  [[nodiscard]] const SteeringParams& params() const { return params_; }
  [[nodiscard]] bool dragging(std::int64_t id) const { return drags_.count(id) != 0; }
  [[nodiscard]] std::size_t active_drags() const { return drags_.size(); }
  /// Cursor position the dragged circle is pulled toward.
  [[nodiscard]] std::optional<Point> drag_target(std::int64_t id) const {
    const auto it = drags_.find(id);
    if (it == drags_.end()) return std::nullopt;
    return it->second.target;
  }
  /// Circle currently being transported, if any.
  [[nodiscard]] std::optional<std::int64_t> transported() const {
    if (!transport_) return std::nullopt;
    return transport_->circle;
  }
  [[nodiscard]] long transport_remaining() const { return transport_ ? transport_->remaining : 0; }

 private:
  using Handle = std::shared_ptr<FactorId>;  // filled once the AddFactor is applied

  struct Attached {
    Handle factor;
    SteerFactor* object = nullptr;  // owned by the graph
  };
  struct Drag {
    Attached a;
    Point target;
  };
  struct Transport {
    std::int64_t circle = -1;
    Handle factor;
    Point target;
    long remaining = 0;
  };

  [[nodiscard]] Weight weight() const { return Weight::standard(params_.drag_weight); }

  void emit(GlobalContext& ctx, FactorId f, std::int64_t circle, Point t) {
    const CircleVars& cv = model_->circles[static_cast<std::size_t>(circle)];
    ctx.request_emission(f, cv.x, Message{t.x, weight()});
    ctx.request_emission(f, cv.y, Message{t.y, weight()});
  }

  Attached attach(GlobalContext& ctx, std::int64_t circle, Point t) {
    const CircleVars& cv = model_->circles[static_cast<std::size_t>(circle)];
    auto f = std::make_unique<SteerFactor>();
    Attached a{std::make_shared<FactorId>(), f.get()};
    set_target(a.object, circle, t);
    ctx.queue(edit::AddFactor{std::move(f), {cv.x, cv.y}});
    pending_.push_back(a.factor);
    return a;
  }

  void set_target(SteerFactor* obj, std::int64_t circle, Point t) const {
    const CircleVars& cv = model_->circles[static_cast<std::size_t>(circle)];
    obj->set_emission(cv.x, Message{t.x, weight()});
    obj->set_emission(cv.y, Message{t.y, weight()});
  }

  void move(GlobalContext& ctx, std::int64_t circle, Drag& d, Point t) {
    d.target = t;
    if (d.a.factor->valid()) {
      emit(ctx, *d.a.factor, circle, t);
    } else {
      set_target(d.a.object, circle, t);  // AddFactor still queued in this batch
    }
  }

  [[nodiscard]] bool valid_circle(std::int64_t id) const {
    return id >= 0 && static_cast<std::size_t>(id) < model_->size();
  }

  void apply(GlobalContext& ctx, const FactorGraph& g, cmd::DragStart& c) {
    if (!valid_circle(c.id) || drags_.count(c.id)) return;
    const CircleVars& cv = model_->circles[static_cast<std::size_t>(c.id)];
    const Point here{g.variable(cv.x).value, g.variable(cv.y).value};
    drags_[c.id] = Drag{attach(ctx, c.id, here), here};
  }
  void apply(GlobalContext& ctx, const FactorGraph&, cmd::DragMove& c) {
    if (!valid_circle(c.id)) return;
    auto it = drags_.find(c.id);
    if (it == drags_.end()) {
      drags_[c.id] = Drag{attach(ctx, c.id, {c.x, c.y}), {c.x, c.y}};
    } else {
      move(ctx, c.id, it->second, {c.x, c.y});
    }
  }
  void apply(GlobalContext& ctx, const FactorGraph&, cmd::DragEnd& c) {
    auto it = drags_.find(c.id);
    if (it == drags_.end()) return;
    release(ctx, it->second.a.factor);
    drags_.erase(it);
  }
  void apply(GlobalContext& ctx, const FactorGraph&, cmd::Vacancy& c) {
    const OverlapReport& worst = maintenance_->overlap();
    if (worst.circle < 0) return;
    if (transport_) release(ctx, transport_->factor);
    transport_ = Transport{worst.circle, attach(ctx, worst.circle, {c.x, c.y}).factor, {c.x, c.y},
                           params_.transport_burst};
  }
  void apply(GlobalContext&, const FactorGraph&, cmd::Pause&) {}
  void apply(GlobalContext&, const FactorGraph&, cmd::Resume&) {}
  void apply(GlobalContext& ctx, const FactorGraph&, cmd::SetParam& c) {
    if (c.key == "drag_weight") {
      params_.drag_weight = c.value;
      for (auto& [id, d] : drags_) move(ctx, id, d, d.target);
    } else if (c.key == "transport_burst") {
      params_.transport_burst = static_cast<long>(c.value);
    }
  }

  void release(GlobalContext& ctx, const Handle& h) {
    if (h->valid()) {
      ctx.queue(edit::RemoveFactor{*h});
    } else {
      orphans_.push_back(h);
    }
  }

  const PackingModel* model_;
  const PairMaintenance* maintenance_;
  std::shared_ptr<CommandQueue> queue_;
  SteeringParams params_;
  std::map<std::int64_t, Drag> drags_;
  std::optional<Transport> transport_;
  std::vector<Handle> pending_;  // one per queued AddFactor, in order
  std::vector<Handle> orphans_;
};

}  // namespace twa::packing

#endif  // TWA_PACKING_STEERING_HPP
