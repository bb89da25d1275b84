#pragma once

// Static, event and behavior legality checks. All findings are data: the
// validators never throw on a bad model.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "tmkit/model.hpp"
#include "tmkit/parser.hpp"

namespace tmkit {

enum class RuleCode : std::uint8_t {
  intra_adjacency,
  boundary_rule,
  trigger_rule,
  region_member,
  region_connected,
  region_empty,
  behavior_dangling,
  behavior_cycle,
  behavior_isolated,
  declared_unsupported,
  behavior_order_violation,
};

inline constexpr std::string_view to_string(RuleCode c) noexcept {
  switch (c) {
    case RuleCode::intra_adjacency: return "INTRA_ADJACENCY";
    case RuleCode::boundary_rule: return "BOUNDARY_RULE";
    case RuleCode::trigger_rule: return "TRIGGER_RULE";
    case RuleCode::region_member: return "REGION_MEMBER";
    case RuleCode::region_connected: return "REGION_CONNECTED";
    case RuleCode::region_empty: return "REGION_EMPTY";
    case RuleCode::behavior_dangling: return "BEHAVIOR_DANGLING";
    case RuleCode::behavior_cycle: return "BEHAVIOR_CYCLE";
    case RuleCode::behavior_isolated: return "BEHAVIOR_ISOLATED";
    case RuleCode::declared_unsupported: return "DECLARED_UNSUPPORTED";
    case RuleCode::behavior_order_violation: return "BEHAVIOR_ORDER_VIOLATION";
  }
  return "?";
}

enum class Mode : std::uint8_t { strict, lenient };

inline constexpr Severity severity_of(RuleCode c, Mode mode) noexcept {
  switch (c) {
    case RuleCode::intra_adjacency:
      return mode == Mode::strict ? Severity::error : Severity::warning;
    case RuleCode::behavior_isolated:
    case RuleCode::declared_unsupported:
      return Severity::warning;
    default:
      return Severity::error;
  }
}

struct Violation {
  RuleCode code = RuleCode::intra_adjacency;
  std::string subject;
  std::string message;
  Severity severity = Severity::error;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t checked_rules = 0;

  bool valid() const noexcept { return violations.empty(); }

  std::size_t error_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        violations.begin(), violations.end(),
        [](const Violation& v) { return v.severity == Severity::error; }));
  }
  std::size_t warning_count() const noexcept { return violations.size() - error_count(); }
  bool has_errors() const noexcept { return error_count() != 0; }

  bool contains(RuleCode c) const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [c](const Violation& v) { return v.code == c; });
  }

  void add(RuleCode code, std::string subject, std::string message, Mode mode = Mode::strict) {
    violations.push_back(
        Violation{code, std::move(subject), std::move(message), severity_of(code, mode)});
  }

  /// Canonical order: rule code name, then subject id, then message.
  void canonicalize() {
    std::sort(violations.begin(), violations.end(), [](const Violation& a, const Violation& b) {
      return std::make_tuple(to_string(a.code), std::string_view(a.subject),
                             std::string_view(a.message)) <
             std::make_tuple(to_string(b.code), std::string_view(b.subject),
                             std::string_view(b.message));
    });
  }

  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
    checked_rules += other.checked_rules;
    canonicalize();
  }

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

inline std::string describe_stage(const Stage& s) {
  std::string out(to_string(s.kind));
  if (s.direction != Direction::none) {
    out += '-';
    out += to_string(s.direction);
  }
  return out;
}

/// Allowed flow successors inside one thimac.
inline constexpr bool legal_intra_flow(const Stage& from, const Stage& to) noexcept {
  switch (from.kind) {
    case ActionKind::create:
    case ActionKind::receive:
      return to.kind == ActionKind::process || to.kind == ActionKind::release;
    case ActionKind::process:
      return to.kind == ActionKind::release;
    case ActionKind::release:
      return to.kind == ActionKind::transfer && to.direction == Direction::out;
    case ActionKind::transfer:
      return from.direction == Direction::in && to.kind == ActionKind::receive;
  }
  return false;
}

/// Crossing a machine boundary is only ever transfer-out to transfer-in.
inline constexpr bool legal_boundary_flow(const Stage& from, const Stage& to) noexcept {
  return from.kind == ActionKind::transfer && from.direction == Direction::out &&
         to.kind == ActionKind::transfer && to.direction == Direction::in;
}

inline ValidationReport validate_static(const Model& m, Mode mode = Mode::strict) {
  ValidationReport r;
  for (const auto& f : m.flows()) {
    const auto& from = m.stage(f.from);
    const auto& to = m.stage(f.to);
    ++r.checked_rules;
    if (from.owner == to.owner) {
      if (!legal_intra_flow(from, to))
        r.add(RuleCode::intra_adjacency, f.id,
              describe_stage(from) + " -> " + describe_stage(to) + " is not a legal flow inside " +
                  m.path_of(from.owner) + " (" + from.id + " -> " + to.id + ")",
              mode);
    } else if (!legal_boundary_flow(from, to)) {
      r.add(RuleCode::boundary_rule, f.id,
            "flow crosses a machine boundary as " + describe_stage(from) + " -> " +
                describe_stage(to) + "; only transfer-out -> transfer-in may cross (" + from.id +
                " -> " + to.id + ")",
            mode);
    }
  }
  for (const auto& t : m.triggers()) {
    ++r.checked_rules;
    if (t.from == t.to)
      r.add(RuleCode::trigger_rule, t.id, "trigger from " + m.stage(t.from).id + " to itself",
            mode);
  }
  r.canonicalize();
  return r;
}

namespace detail {

// Weak connectivity of the subgraph induced by `members` over all arrows.
inline bool weakly_connected(const Model& m, const std::vector<StageIndex>& members) {
  if (members.size() <= 1) return true;
  std::map<StageIndex, StageIndex> parent;
  for (auto s : members) parent.emplace(s, s);
  auto find = [&](StageIndex s) {
    while (parent[s] != s) s = parent[s] = parent[parent[s]];
    return s;
  };
  auto unite = [&](StageIndex a, StageIndex b) {
    if (!parent.count(a) || !parent.count(b)) return;
    parent[find(a)] = find(b);
  };
  for (const auto& f : m.flows()) unite(f.from, f.to);
  for (const auto& t : m.triggers()) unite(t.from, t.to);
  auto root = find(members.front());
  return std::all_of(members.begin(), members.end(),
                     [&](StageIndex s) { return find(s) == root; });
}

}  // namespace detail

/// Resolves an event's region to stage indices, dropping unknown paths and
/// duplicates. `missing` receives the unresolved paths when provided.
inline std::vector<StageIndex> resolve_region(const Model& m, const Event& e,
                                              std::vector<std::string>* missing = nullptr) {
  std::vector<StageIndex> out;
  for (const auto& p : e.region) {
    auto s = m.find_stage(p);
    if (!s) {
      if (missing) missing->push_back(p);
      continue;
    }
    if (std::find(out.begin(), out.end(), *s) == out.end()) out.push_back(*s);
  }
  return out;
}

inline ValidationReport validate_events(const Model& m) {
  ValidationReport r;
  for (const auto& e : m.events()) {
    r.checked_rules += 3;
    if (e.region.empty()) {
      r.add(RuleCode::region_empty, e.id, "event " + e.id + " has an empty region");
      continue;
    }
    std::vector<std::string> missing;
    auto members = resolve_region(m, e, &missing);
    for (const auto& p : missing)
      r.add(RuleCode::region_member, e.id, "region member " + p + " is not a stage of the model");
    if (missing.empty() && !detail::weakly_connected(m, members))
      r.add(RuleCode::region_connected, e.id,
            "region of " + e.id + " is not weakly connected by the model's arrows");
  }
  r.canonicalize();
  return r;
}

namespace detail {

// Tarjan SCC over declared events; returns component id per event position.
inline std::vector<int> strongly_connected(std::size_t n,
                                           const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int counter = 0, comps = 0;
  auto strong = [&](auto&& self, std::size_t v) -> void {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (auto w : adj[v]) {
      if (index[w] < 0) {
        self(self, w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        auto w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
        if (w == v) break;
      }
      ++comps;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) strong(strong, v);
  return comp;
}

}  // namespace detail

inline std::string edge_subject(const BehaviorEdge& e) { return e.from + "->" + e.to; }

inline ValidationReport validate_behavior(const Model& m) {
  ValidationReport r;
  const auto n = m.events().size();
  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<bool> touched(n, false);
  std::vector<std::pair<std::size_t, std::size_t>> resolved;
  for (const auto& e : m.behavior()) {
    r.checked_rules += 2;
    auto a = m.event_position(e.from);
    auto b = m.event_position(e.to);
    if (!a || !b) {
      for (const auto* id : {&e.from, &e.to})
        if (!m.event_position(*id))
          r.add(RuleCode::behavior_dangling, edge_subject(e),
                "behavior edge references undeclared event " + *id);
      continue;
    }
    adj[*a].push_back(*b);
    touched[*a] = touched[*b] = true;
    resolved.emplace_back(*a, *b);
  }
  auto comp = detail::strongly_connected(n, adj);
  std::set<std::pair<std::size_t, std::size_t>> reported;
  for (auto [a, b] : resolved) {
    if ((a == b || comp[a] == comp[b]) && reported.insert({a, b}).second) {
      BehaviorEdge e{m.events()[a].id, m.events()[b].id};
      r.add(RuleCode::behavior_cycle, edge_subject(e),
            a == b ? "self-loop on " + e.from : "edge lies on a behavior cycle");
    }
  }
  if (n >= 2) {
    for (std::size_t i = 0; i < n; ++i) {
      ++r.checked_rules;
      if (!touched[i])
        r.add(RuleCode::behavior_isolated, m.events()[i].id,
              "event " + m.events()[i].id + " takes part in no behavior edge");
    }
  }
  r.canonicalize();
  return r;
}

/// Runs the static, event and behavior validators and merges their findings.
inline ValidationReport validate_all(const Model& m, Mode mode = Mode::strict) {
  ValidationReport r = validate_static(m, mode);
  r.merge(validate_events(m));
  r.merge(validate_behavior(m));
  return r;
}

inline std::string format(const Violation& v) {
  return std::string(to_string(v.severity)) + " " + std::string(to_string(v.code)) + " [" +
         v.subject + "] " + v.message;
}

}  // namespace tmkit
