#pragma once

// Event/behavior layer: dataflow-induced precedence between events, checking
// declared behavior against it, and event merging.

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/model.hpp"
#include "tmkit/validator.hpp"

namespace tmkit {

/// Edge A->B for every arrow leading from a stage of A's region into a stage of
/// B's region, A != B. Deduplicated, ordered by event declaration position.
inline std::vector<BehaviorEdge> derive_precedence(const Model& m) {
  std::vector<std::vector<std::size_t>> events_at(m.stages().size());
  for (std::size_t e = 0; e < m.events().size(); ++e)
    for (auto s : resolve_region(m, m.events()[e])) events_at[s.value].push_back(e);

  std::set<std::pair<std::size_t, std::size_t>> edges;
  auto scan = [&](StageIndex from, StageIndex to) {
    for (auto a : events_at[from.value])
      for (auto b : events_at[to.value])
        if (a != b) edges.emplace(a, b);
  };
  for (const auto& f : m.flows()) scan(f.from, f.to);
  for (const auto& t : m.triggers()) scan(t.from, t.to);

  std::vector<BehaviorEdge> out;
  out.reserve(edges.size());
  for (auto [a, b] : edges) out.push_back({m.events()[a].id, m.events()[b].id});
  return out;
}

namespace detail {

inline std::vector<std::vector<bool>> reachability(const Model& m,
                                                   const std::vector<BehaviorEdge>& edges) {
  const auto n = m.events().size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    auto a = m.event_position(e.from);
    auto b = m.event_position(e.to);
    if (a && b) adj[*a].push_back(*b);
  }
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<std::size_t> stack(adj[src].begin(), adj[src].end());
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      if (reach[src][v]) continue;
      reach[src][v] = true;
      for (auto w : adj[v])
        if (!reach[src][w]) stack.push_back(w);
    }
  }
  return reach;
}

}  // namespace detail

/// Declared edges must be backed by dataflow precedence or its transitive
/// closure; unsupported ones are warnings.
inline ValidationReport check_declared_behavior(const Model& m) {
  ValidationReport r;
  if (m.behavior().empty()) return r;
  auto reach = detail::reachability(m, derive_precedence(m));
  for (const auto& e : m.behavior()) {
    auto a = m.event_position(e.from);
    auto b = m.event_position(e.to);
    if (!a || !b) continue;
    ++r.checked_rules;
    if (!reach[*a][*b])
      r.add(RuleCode::declared_unsupported, edge_subject(e),
            "no dataflow path leads from " + e.from + " to " + e.to);
  }
  r.canonicalize();
  return r;
}

enum class MergeErrc : std::uint8_t { unknown_event, merge_disconnected, duplicate_id, empty };

class MergeError : public std::runtime_error {
 public:
  MergeError(MergeErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  MergeErrc code() const noexcept { return code_; }

 private:
  MergeErrc code_;
};

/// Replaces the named events with one event over the union of their regions.
/// The merged event takes the position of the earliest merged event and the
/// smallest declared order among them; behavior edges are re-targeted and any
/// self-loops this produces are dropped.
inline Model merge_events(const Model& m, const std::vector<std::string>& ids,
                          const std::string& new_id) {
  if (ids.empty()) throw MergeError(MergeErrc::empty, "no events to merge");
  std::set<std::string> chosen(ids.begin(), ids.end());
  for (const auto& id : chosen)
    if (!m.find_event(id)) throw MergeError(MergeErrc::unknown_event, "unknown event " + id);
  if (!chosen.count(new_id) && m.find_event(new_id))
    throw MergeError(MergeErrc::duplicate_id, "event id " + new_id + " already in use");

  Event merged;
  merged.id = new_id;
  std::vector<std::string> descriptions;
  bool all_hinted = true;
  std::uint32_t hint_sum = 0;
  std::vector<Event> events;
  std::size_t slot = 0;
  bool placed = false;
  for (const auto& e : m.events()) {
    if (!chosen.count(e.id)) {
      events.push_back(e);
      continue;
    }
    if (!placed) {
      slot = events.size();
      placed = true;
    }
    if (!e.description.empty()) descriptions.push_back(e.description);
    for (const auto& p : e.region)
      if (std::find(merged.region.begin(), merged.region.end(), p) == merged.region.end())
        merged.region.push_back(p);
    if (e.time.declared_order &&
        (!merged.time.declared_order || *e.time.declared_order < *merged.time.declared_order))
      merged.time.declared_order = e.time.declared_order;
    if (e.time.duration_hint) hint_sum += *e.time.duration_hint;
    else all_hinted = false;
  }
  if (all_hinted) merged.time.duration_hint = hint_sum;
  for (std::size_t i = 0; i < descriptions.size(); ++i)
    merged.description += (i ? "; " : "") + descriptions[i];

  std::vector<std::string> missing;
  auto members = resolve_region(m, merged, &missing);
  if (!missing.empty() || !detail::weakly_connected(m, members))
    throw MergeError(MergeErrc::merge_disconnected,
                     "union of the merged regions is not weakly connected");

  events.insert(events.begin() + static_cast<std::ptrdiff_t>(slot), std::move(merged));

  std::vector<BehaviorEdge> behavior;
  std::set<BehaviorEdge> seen;
  for (auto e : m.behavior()) {
    bool retargeted = chosen.count(e.from) || chosen.count(e.to);
    if (!retargeted) {
      behavior.push_back(std::move(e));
      continue;
    }
    if (chosen.count(e.from)) e.from = new_id;
    if (chosen.count(e.to)) e.to = new_id;
    if (e.from == e.to) continue;
    if (seen.insert(e).second) behavior.push_back(std::move(e));
  }
  return m.with_events_and_behavior(std::move(events), std::move(behavior));
}

}  // namespace tmkit
