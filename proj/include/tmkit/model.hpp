#pragma once

// In-memory Thinging Machine model: thimac tree, stages, arrows, events and
// behavior edges. Models are immutable once built; every mutation goes through
// ModelBuilder or one of the `with_*` copy helpers, which re-check invariants.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tmkit {

enum class ActionKind : std::uint8_t { create, process, release, transfer, receive };
enum class Direction : std::uint8_t { none, in, out };

inline constexpr std::string_view to_string(ActionKind k) noexcept {
  switch (k) {
    case ActionKind::create: return "create";
    case ActionKind::process: return "process";
    case ActionKind::release: return "release";
    case ActionKind::transfer: return "transfer";
    case ActionKind::receive: return "receive";
  }
  return "?";
}

inline constexpr std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::in: return "in";
    case Direction::out: return "out";
    case Direction::none: return "none";
  }
  return "?";
}

inline std::optional<ActionKind> parse_action_kind(std::string_view s) noexcept {
  for (auto k : {ActionKind::create, ActionKind::process, ActionKind::release,
                 ActionKind::transfer, ActionKind::receive})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<Direction> parse_direction(std::string_view s) noexcept {
  if (s == "in") return Direction::in;
  if (s == "out") return Direction::out;
  return std::nullopt;
}

/// Typed position into one of the model's element tables.
template <class Tag>
struct Index {
  std::uint32_t value = 0;
  friend auto operator<=>(const Index&, const Index&) = default;
};

using ThimacIndex = Index<struct ThimacTag>;
using StageIndex = Index<struct StageTag>;
using FlowIndex = Index<struct FlowTag>;
using TriggerIndex = Index<struct TriggerTag>;

struct Stage {
  std::string id;  // canonical dotted path, unique model-wide
  ThimacIndex owner;
  ActionKind kind = ActionKind::create;
  Direction direction = Direction::none;
  std::uint32_t cost_ticks = 1;
  std::optional<int> annotation;

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct Thimac {
  std::string id;  // local name, unique among siblings
  std::string display_name;
  std::optional<ThimacIndex> parent;
  std::vector<ThimacIndex> children;
  std::vector<StageIndex> stages;

  friend bool operator==(const Thimac&, const Thimac&) = default;
};

struct FlowArrow {
  std::string id;
  StageIndex from;
  StageIndex to;
  std::optional<std::string> label;
  std::optional<int> annotation;

  friend bool operator==(const FlowArrow&, const FlowArrow&) = default;
};

struct TriggerArrow {
  std::string id;
  StageIndex from;
  StageIndex to;
  std::optional<std::string> label;
  std::optional<int> annotation;

  friend bool operator==(const TriggerArrow&, const TriggerArrow&) = default;
};

struct TimeAttrs {
  std::optional<std::uint32_t> declared_order;
  std::optional<std::uint32_t> duration_hint;

  friend bool operator==(const TimeAttrs&, const TimeAttrs&) = default;
};

// Region members and behavior endpoints are kept by name so that dangling
// references survive construction and are reported by the validators.
struct Event {
  std::string id;
  std::string description;
  std::vector<std::string> region;
  TimeAttrs time;

  friend bool operator==(const Event&, const Event&) = default;
};

struct BehaviorEdge {
  std::string from;
  std::string to;

  friend auto operator<=>(const BehaviorEdge&, const BehaviorEdge&) = default;
};

struct AnnotationTarget {
  enum class Kind : std::uint8_t { stage, flow, trigger };
  Kind kind = Kind::stage;
  std::uint32_t index = 0;

  friend bool operator==(const AnnotationTarget&, const AnnotationTarget&) = default;
};

enum class BuildErrc : std::uint8_t {
  duplicate_id,
  dangling_reference,
  duplicate_stage_kind,
  invalid_value,
};

inline constexpr std::string_view to_string(BuildErrc e) noexcept {
  switch (e) {
    case BuildErrc::duplicate_id: return "DuplicateId";
    case BuildErrc::dangling_reference: return "DanglingReference";
    case BuildErrc::duplicate_stage_kind: return "DuplicateStageKind";
    case BuildErrc::invalid_value: return "InvalidValue";
  }
  return "?";
}

class BuildError : public std::runtime_error {
 public:
  BuildError(BuildErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  BuildErrc code() const noexcept { return code_; }

 private:
  BuildErrc code_;
};

namespace detail {

inline std::string stage_suffix(ActionKind kind, Direction dir) {
  std::string s(to_string(kind));
  if (kind == ActionKind::transfer) {
    s += '.';
    s += to_string(dir);
  }
  return s;
}

}  // namespace detail

class ModelBuilder;

class Model {
 public:
  Model() = default;
  explicit Model(std::string name) : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }
  const std::vector<Thimac>& thimacs() const noexcept { return thimacs_; }
  const std::vector<Stage>& stages() const noexcept { return stages_; }
  const std::vector<FlowArrow>& flows() const noexcept { return flows_; }
  const std::vector<TriggerArrow>& triggers() const noexcept { return triggers_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  const std::vector<BehaviorEdge>& behavior() const noexcept { return behavior_; }

  const Thimac& thimac(ThimacIndex i) const { return thimacs_.at(i.value); }
  const Stage& stage(StageIndex i) const { return stages_.at(i.value); }
  const FlowArrow& flow(FlowIndex i) const { return flows_.at(i.value); }
  const TriggerArrow& trigger(TriggerIndex i) const { return triggers_.at(i.value); }

  std::vector<ThimacIndex> roots() const {
    std::vector<ThimacIndex> out;
    for (std::uint32_t i = 0; i < thimacs_.size(); ++i)
      if (!thimacs_[i].parent) out.push_back(ThimacIndex{i});
    return out;
  }

  /// Dotted path of a thimac from its top-level ancestor.
  std::string path_of(ThimacIndex t) const {
    std::vector<const std::string*> parts;
    for (std::optional<ThimacIndex> cur = t; cur; cur = thimac(*cur).parent)
      parts.push_back(&thimac(*cur).id);
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      if (!out.empty()) out += '.';
      out += **it;
    }
    return out;
  }

  const std::string& path_of(StageIndex s) const { return stage(s).id; }

  std::optional<StageIndex> find_stage(std::string_view path) const {
    auto it = stage_by_path_.find(path);
    if (it == stage_by_path_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<ThimacIndex> find_thimac(std::string_view path) const {
    auto it = thimac_by_path_.find(path);
    if (it == thimac_by_path_.end()) return std::nullopt;
    return it->second;
  }

  const Event* find_event(std::string_view id) const {
    for (const auto& e : events_)
      if (e.id == id) return &e;
    return nullptr;
  }

  std::optional<std::size_t> event_position(std::string_view id) const {
    for (std::size_t i = 0; i < events_.size(); ++i)
      if (events_[i].id == id) return i;
    return std::nullopt;
  }

  /// True when `t` lies in the subtree rooted at `ancestor` (inclusive).
  bool contains(ThimacIndex ancestor, ThimacIndex t) const {
    for (std::optional<ThimacIndex> cur = t; cur; cur = thimac(*cur).parent)
      if (*cur == ancestor) return true;
    return false;
  }

  std::optional<StageIndex> stage_of(ThimacIndex t, ActionKind kind,
                                     Direction dir = Direction::none) const {
    for (auto s : thimac(t).stages)
      if (stage(s).kind == kind && stage(s).direction == dir) return s;
    return std::nullopt;
  }

  /// Single-action thimacs are the purely static ones.
  bool purely_static(ThimacIndex t) const { return thimac(t).stages.size() == 1; }

  std::map<int, AnnotationTarget> annotations() const {
    std::map<int, AnnotationTarget> out;
    for (std::uint32_t i = 0; i < stages_.size(); ++i)
      if (stages_[i].annotation)
        out.emplace(*stages_[i].annotation, AnnotationTarget{AnnotationTarget::Kind::stage, i});
    for (std::uint32_t i = 0; i < flows_.size(); ++i)
      if (flows_[i].annotation)
        out.emplace(*flows_[i].annotation, AnnotationTarget{AnnotationTarget::Kind::flow, i});
    for (std::uint32_t i = 0; i < triggers_.size(); ++i)
      if (triggers_[i].annotation)
        out.emplace(*triggers_[i].annotation,
                    AnnotationTarget{AnnotationTarget::Kind::trigger, i});
    return out;
  }

  // Copy helpers. Each returns a fresh model after re-checking the invariants
  // that the replaced collection participates in.
  Model with_flows(std::vector<FlowArrow> flows) const;
  Model with_triggers(std::vector<TriggerArrow> triggers) const;
  Model with_events(std::vector<Event> events) const;
  Model with_behavior(std::vector<BehaviorEdge> behavior) const;
  Model with_events_and_behavior(std::vector<Event> events,
                                 std::vector<BehaviorEdge> behavior) const;

  friend bool operator==(const Model& a, const Model& b) {
    return a.name_ == b.name_ && a.thimacs_ == b.thimacs_ && a.stages_ == b.stages_ &&
           a.flows_ == b.flows_ && a.triggers_ == b.triggers_ && a.events_ == b.events_ &&
           a.behavior_ == b.behavior_;
  }

 private:
  friend class ModelBuilder;

  void reindex() {
    stage_by_path_.clear();
    thimac_by_path_.clear();
    for (std::uint32_t i = 0; i < stages_.size(); ++i)
      stage_by_path_.emplace(stages_[i].id, StageIndex{i});
    for (std::uint32_t i = 0; i < thimacs_.size(); ++i)
      thimac_by_path_.emplace(path_of(ThimacIndex{i}), ThimacIndex{i});
  }

  void check_arrow(StageIndex from, StageIndex to, const std::string& what) const {
    if (from.value >= stages_.size() || to.value >= stages_.size())
      throw BuildError(BuildErrc::dangling_reference, what + " endpoint out of range");
  }

  void check_annotations() const {
    std::set<int> seen;
    auto take = [&](const std::optional<int>& a) {
      if (!a) return;
      if (*a <= 0)
        throw BuildError(BuildErrc::invalid_value,
                         "annotation label must be positive: " + std::to_string(*a));
      if (!seen.insert(*a).second)
        throw BuildError(BuildErrc::duplicate_id, "annotation @" + std::to_string(*a));
    };
    for (const auto& s : stages_) take(s.annotation);
    for (const auto& f : flows_) take(f.annotation);
    for (const auto& t : triggers_) take(t.annotation);
  }

  void check_events() const {
    std::set<std::string, std::less<>> ids;
    std::set<std::uint32_t> orders;
    for (const auto& e : events_) {
      if (e.id.empty()) throw BuildError(BuildErrc::invalid_value, "empty event id");
      if (!ids.insert(e.id).second) throw BuildError(BuildErrc::duplicate_id, "event " + e.id);
      if (e.time.declared_order) {
        if (*e.time.declared_order == 0)
          throw BuildError(BuildErrc::invalid_value, "event " + e.id + " order must be positive");
        if (!orders.insert(*e.time.declared_order).second)
          throw BuildError(BuildErrc::duplicate_id,
                           "declared order " + std::to_string(*e.time.declared_order));
      }
      if (e.time.duration_hint && *e.time.duration_hint == 0)
        throw BuildError(BuildErrc::invalid_value, "event " + e.id + " duration must be positive");
    }
  }

  std::string name_;
  std::vector<Thimac> thimacs_;
  std::vector<Stage> stages_;
  std::vector<FlowArrow> flows_;
  std::vector<TriggerArrow> triggers_;
  std::vector<Event> events_;
  std::vector<BehaviorEdge> behavior_;
  std::map<std::string, StageIndex, std::less<>> stage_by_path_;
  std::map<std::string, ThimacIndex, std::less<>> thimac_by_path_;
};

inline Model Model::with_flows(std::vector<FlowArrow> flows) const {
  Model m = *this;
  for (const auto& f : flows) {
    check_arrow(f.from, f.to, "flow " + f.id);
    if (f.from == f.to)
      throw BuildError(BuildErrc::invalid_value, "flow " + f.id + " is a self-loop");
  }
  m.flows_ = std::move(flows);
  m.check_annotations();
  return m;
}

inline Model Model::with_triggers(std::vector<TriggerArrow> triggers) const {
  Model m = *this;
  for (const auto& t : triggers) check_arrow(t.from, t.to, "trigger " + t.id);
  m.triggers_ = std::move(triggers);
  m.check_annotations();
  return m;
}

inline Model Model::with_events(std::vector<Event> events) const {
  Model m = *this;
  m.events_ = std::move(events);
  m.check_events();
  return m;
}

inline Model Model::with_behavior(std::vector<BehaviorEdge> behavior) const {
  Model m = *this;
  m.behavior_ = std::move(behavior);
  return m;
}

inline Model Model::with_events_and_behavior(std::vector<Event> events,
                                             std::vector<BehaviorEdge> behavior) const {
  Model m = with_events(std::move(events));
  m.behavior_ = std::move(behavior);
  return m;
}

/// Convenience lookup with the free-function spelling used across the toolkit.
inline std::optional<StageIndex> find_stage(const Model& m, std::string_view path) {
  return m.find_stage(path);
}

/// Flows with exactly one endpoint inside the subtree rooted at `t`.
inline std::vector<FlowIndex> boundary_of(const Model& m, ThimacIndex t) {
  std::vector<FlowIndex> out;
  for (std::uint32_t i = 0; i < m.flows().size(); ++i) {
    const auto& f = m.flows()[i];
    bool from_in = m.contains(t, m.stage(f.from).owner);
    bool to_in = m.contains(t, m.stage(f.to).owner);
    if (from_in != to_in) out.push_back(FlowIndex{i});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Construction

struct ThimacDecl {
  std::string parent_path;  // empty for a top-level thimac
  std::string id;
  std::string display_name;
};

struct StageDecl {
  std::string thimac_path;
  ActionKind kind = ActionKind::create;
  Direction direction = Direction::none;
  std::uint32_t cost_ticks = 1;
  std::optional<int> annotation;
};

struct FlowDecl {
  std::string from;
  std::string to;
  std::optional<std::string> label;
  std::optional<int> annotation;
};

struct TriggerDecl {
  std::string from;
  std::string to;
  std::optional<std::string> label;
  std::optional<int> annotation;
};

using EventDecl = Event;
using BehaviorDecl = BehaviorEdge;

using Directive =
    std::variant<ThimacDecl, StageDecl, FlowDecl, TriggerDecl, EventDecl, BehaviorDecl>;

class ModelBuilder {
 public:
  explicit ModelBuilder(std::string name) : name_(std::move(name)) {}

  ThimacIndex add_thimac(std::optional<ThimacIndex> parent, std::string id,
                         std::string display_name = {}) {
    if (id.empty()) throw BuildError(BuildErrc::invalid_value, "empty thimac id");
    if (parent && parent->value >= thimacs_.size())
      throw BuildError(BuildErrc::dangling_reference, "parent of thimac " + id);
    for (const auto& t : thimacs_)
      if (t.parent == parent && t.id == id)
        throw BuildError(BuildErrc::duplicate_id, "thimac " + qualified(parent, id));
    ThimacIndex idx{static_cast<std::uint32_t>(thimacs_.size())};
    Thimac t;
    t.id = std::move(id);
    t.display_name = std::move(display_name);
    t.parent = parent;
    thimacs_.push_back(std::move(t));
    if (parent) thimacs_[parent->value].children.push_back(idx);
    return idx;
  }

  ThimacIndex add_thimac(const ThimacDecl& d) {
    std::optional<ThimacIndex> parent;
    if (!d.parent_path.empty()) {
      parent = thimac_at(d.parent_path);
      if (!parent) throw BuildError(BuildErrc::dangling_reference, "thimac " + d.parent_path);
    }
    return add_thimac(parent, d.id, d.display_name);
  }

  StageIndex add_stage(ThimacIndex owner, ActionKind kind, Direction dir = Direction::none,
                       std::uint32_t cost = 1, std::optional<int> annotation = {}) {
    if (owner.value >= thimacs_.size())
      throw BuildError(BuildErrc::dangling_reference, "stage owner");
    if ((kind == ActionKind::transfer) != (dir != Direction::none))
      throw BuildError(BuildErrc::invalid_value,
                       "transfer stages need a direction and only transfers carry one");
    if (cost == 0) throw BuildError(BuildErrc::invalid_value, "stage cost must be positive");
    std::string path = path_of(owner) + '.' + detail::stage_suffix(kind, dir);
    for (const auto& s : stages_)
      if (s.owner == owner && s.kind == kind && s.direction == dir)
        throw BuildError(BuildErrc::duplicate_stage_kind, path);
    StageIndex idx{static_cast<std::uint32_t>(stages_.size())};
    stages_.push_back(Stage{std::move(path), owner, kind, dir, cost, annotation});
    thimacs_[owner.value].stages.push_back(idx);
    return idx;
  }

  StageIndex add_stage(const StageDecl& d) {
    auto owner = thimac_at(d.thimac_path);
    if (!owner) throw BuildError(BuildErrc::dangling_reference, "thimac " + d.thimac_path);
    return add_stage(*owner, d.kind, d.direction, d.cost_ticks, d.annotation);
  }

  void add_flow(const FlowDecl& d) {
    auto [from, to] = endpoints(d.from, d.to, "flow");
    if (from == to) throw BuildError(BuildErrc::invalid_value, "flow self-loop at " + d.from);
    flows_.push_back(FlowArrow{"f" + std::to_string(flows_.size() + 1), from, to, d.label,
                               d.annotation});
  }

  void add_trigger(const TriggerDecl& d) {
    auto [from, to] = endpoints(d.from, d.to, "trigger");
    triggers_.push_back(TriggerArrow{"t" + std::to_string(triggers_.size() + 1), from, to,
                                     d.label, d.annotation});
  }

  void add_event(Event e) { events_.push_back(std::move(e)); }
  void add_behavior(BehaviorEdge e) { behavior_.push_back(std::move(e)); }

  void apply(const Directive& d) {
    std::visit(
        [this](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ThimacDecl>) add_thimac(x);
          else if constexpr (std::is_same_v<T, StageDecl>) add_stage(x);
          else if constexpr (std::is_same_v<T, FlowDecl>) add_flow(x);
          else if constexpr (std::is_same_v<T, TriggerDecl>) add_trigger(x);
          else if constexpr (std::is_same_v<T, Event>) add_event(x);
          else add_behavior(x);
        },
        d);
  }

  std::optional<ThimacIndex> thimac_at(std::string_view path) const {
    for (std::uint32_t i = 0; i < thimacs_.size(); ++i)
      if (path_of(ThimacIndex{i}) == path) return ThimacIndex{i};
    return std::nullopt;
  }

  std::optional<StageIndex> stage_at(std::string_view path) const {
    for (std::uint32_t i = 0; i < stages_.size(); ++i)
      if (stages_[i].id == path) return StageIndex{i};
    return std::nullopt;
  }

  /// Produces the canonical model: thimacs in pre-order, stages grouped by
  /// owner in that order, arrows/events/behavior in declaration order.
  Model build() const {
    Model m(name_);
    std::vector<std::uint32_t> thimac_map(thimacs_.size());
    std::vector<std::uint32_t> order;
    auto visit = [&](auto&& self, std::uint32_t t) -> void {
      thimac_map[t] = static_cast<std::uint32_t>(order.size());
      order.push_back(t);
      for (auto c : thimacs_[t].children) self(self, c.value);
    };
    for (std::uint32_t i = 0; i < thimacs_.size(); ++i)
      if (!thimacs_[i].parent) visit(visit, i);

    std::vector<std::uint32_t> stage_map(stages_.size());
    for (auto old_t : order) {
      for (auto s : thimacs_[old_t].stages) {
        stage_map[s.value] = static_cast<std::uint32_t>(m.stages_.size());
        Stage st = stages_[s.value];
        st.owner = ThimacIndex{thimac_map[old_t]};
        m.stages_.push_back(std::move(st));
      }
    }
    for (auto old_t : order) {
      Thimac t = thimacs_[old_t];
      if (t.parent) t.parent = ThimacIndex{thimac_map[t.parent->value]};
      for (auto& c : t.children) c = ThimacIndex{thimac_map[c.value]};
      for (auto& s : t.stages) s = StageIndex{stage_map[s.value]};
      m.thimacs_.push_back(std::move(t));
    }
    for (auto f : flows_) {
      f.from = StageIndex{stage_map[f.from.value]};
      f.to = StageIndex{stage_map[f.to.value]};
      m.flows_.push_back(std::move(f));
    }
    for (auto t : triggers_) {
      t.from = StageIndex{stage_map[t.from.value]};
      t.to = StageIndex{stage_map[t.to.value]};
      m.triggers_.push_back(std::move(t));
    }
    m.events_ = events_;
    m.behavior_ = behavior_;
    m.reindex();
    m.check_annotations();
    m.check_events();
    return m;
  }

 private:
  std::string path_of(ThimacIndex t) const {
    std::string out = thimacs_[t.value].id;
    for (auto p = thimacs_[t.value].parent; p; p = thimacs_[p->value].parent)
      out = thimacs_[p->value].id + '.' + out;
    return out;
  }

  std::string qualified(std::optional<ThimacIndex> parent, const std::string& id) const {
    return parent ? path_of(*parent) + '.' + id : id;
  }

  std::pair<StageIndex, StageIndex> endpoints(const std::string& from, const std::string& to,
                                              const char* what) const {
    auto f = stage_at(from);
    if (!f) throw BuildError(BuildErrc::dangling_reference, std::string(what) + " source " + from);
    auto t = stage_at(to);
    if (!t) throw BuildError(BuildErrc::dangling_reference, std::string(what) + " target " + to);
    return {*f, *t};
  }

  std::string name_;
  std::vector<Thimac> thimacs_;
  std::vector<Stage> stages_;
  std::vector<FlowArrow> flows_;
  std::vector<TriggerArrow> triggers_;
  std::vector<Event> events_;
  std::vector<BehaviorEdge> behavior_;
};

inline Model build_model(std::string name, std::span<const Directive> directives) {
  ModelBuilder b(std::move(name));
  for (const auto& d : directives) b.apply(d);
  return b.build();
}

/// Re-checks the structural invariants of an already built model. Returns a
/// list of human-readable breaches; empty means the model is well-formed.
inline std::vector<std::string> check_invariants(const Model& m) {
  std::vector<std::string> out;
  std::set<std::string> stage_ids;
  for (std::uint32_t i = 0; i < m.stages().size(); ++i) {
    const auto& s = m.stages()[i];
    if (!stage_ids.insert(s.id).second) out.push_back("duplicate stage id " + s.id);
    if ((s.kind == ActionKind::transfer) != (s.direction != Direction::none))
      out.push_back("direction mismatch at " + s.id);
    if (s.cost_ticks == 0) out.push_back("zero cost at " + s.id);
    if (s.owner.value >= m.thimacs().size()) out.push_back("orphan stage " + s.id);
    else if (s.id != m.path_of(s.owner) + '.' + detail::stage_suffix(s.kind, s.direction))
      out.push_back("non-canonical stage id " + s.id);
  }
  for (std::uint32_t i = 0; i < m.thimacs().size(); ++i) {
    const auto& t = m.thimacs()[i];
    std::set<std::pair<ActionKind, Direction>> kinds;
    for (auto s : t.stages)
      if (!kinds.insert({m.stage(s).kind, m.stage(s).direction}).second)
        out.push_back("duplicate stage kind in " + m.path_of(ThimacIndex{i}));
    std::set<std::string> names;
    for (auto c : t.children)
      if (!names.insert(m.thimac(c).id).second)
        out.push_back("duplicate child " + m.thimac(c).id);
  }
  for (const auto& f : m.flows()) {
    if (f.from.value >= m.stages().size() || f.to.value >= m.stages().size())
      out.push_back("dangling flow " + f.id);
    else if (f.from == f.to)
      out.push_back("self-loop flow " + f.id);
  }
  for (const auto& t : m.triggers())
    if (t.from.value >= m.stages().size() || t.to.value >= m.stages().size())
      out.push_back("dangling trigger " + t.id);
  std::set<int> labels;
  auto label = [&](const std::optional<int>& a) {
    if (a && (*a <= 0 || !labels.insert(*a).second))
      out.push_back("bad annotation " + std::to_string(*a));
  };
  for (const auto& s : m.stages()) label(s.annotation);
  for (const auto& f : m.flows()) label(f.annotation);
  for (const auto& t : m.triggers()) label(t.annotation);
  return out;
}

}  // namespace tmkit
