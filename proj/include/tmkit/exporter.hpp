#pragma once

// Interchange formats: Graphviz DOT views and JSON documents for models,
// simulation logs, validation reports and simulation configs.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tmkit/model.hpp"
#include "tmkit/simulator.hpp"
#include "tmkit/validator.hpp"

namespace tmkit {

enum class View : std::uint8_t { static_view, dynamic_view, behavior_view };

inline constexpr std::string_view to_string(View v) noexcept {
  switch (v) {
    case View::static_view: return "static";
    case View::dynamic_view: return "dynamic";
    case View::behavior_view: return "behavior";
  }
  return "?";
}

inline std::optional<View> parse_view(std::string_view s) noexcept {
  if (s == "static") return View::static_view;
  if (s == "dynamic") return View::dynamic_view;
  if (s == "behavior") return View::behavior_view;
  return std::nullopt;
}

struct RenderOptions {
  View view = View::static_view;
  std::set<std::string> highlight_events;
  bool include_annotations = true;
};

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += '"';
  return out;
}

inline constexpr std::string_view kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string_view color_for(std::size_t i) {
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

inline std::string arrow_label(const std::optional<std::string>& label,
                               const std::optional<int>& annotation, bool annotate) {
  std::string out = label.value_or("");
  if (annotate && annotation) {
    if (!out.empty()) out += ' ';
    out += "(" + std::to_string(*annotation) + ")";
  }
  return out;
}

class DotWriter {
 public:
  DotWriter(const Model& m, const RenderOptions& o) : m_(m), o_(o) {
    for (std::size_t e = 0; e < m.events().size(); ++e) {
      if (!o.highlight_events.count(m.events()[e].id)) continue;
      for (auto s : resolve_region(m, m.events()[e]))
        highlight_.emplace(s.value, color_for(e));
    }
  }

  std::string run() {
    os_ << "digraph " << dot_quote(m_.name()) << " {\n";
    if (o_.view == View::behavior_view) behavior();
    else structure();
    os_ << "}\n";
    return os_.str();
  }

 private:
  void structure() {
    if (!m_.thimacs().empty()) os_ << "  compound=true;\n  node [shape=box];\n";
    for (auto r : m_.roots()) cluster(r, 1);
    for (const auto& f : m_.flows()) {
      os_ << "  " << dot_quote(m_.stage(f.from).id) << " -> " << dot_quote(m_.stage(f.to).id);
      auto label = arrow_label(f.label, f.annotation, o_.include_annotations);
      if (!label.empty()) os_ << " [label=" << dot_quote(label) << "]";
      os_ << ";\n";
    }
    for (const auto& t : m_.triggers()) {
      os_ << "  " << dot_quote(m_.stage(t.from).id) << " -> " << dot_quote(m_.stage(t.to).id)
          << " [style=dashed";
      auto label = arrow_label(t.label, t.annotation, o_.include_annotations);
      if (!label.empty()) os_ << ", label=" << dot_quote(label);
      os_ << "];\n";
    }
    if (o_.view == View::dynamic_view) overlays();
  }

  void cluster(ThimacIndex t, int depth) {
    const auto& th = m_.thimac(t);
    std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    auto path = m_.path_of(t);
    os_ << pad << "subgraph " << dot_quote("cluster_" + path) << " {\n";
    os_ << pad << "  label=" << dot_quote(th.display_name.empty() ? th.id : th.display_name)
        << ";\n";
    os_ << pad << "  " << dot_quote("@" + path) << " [shape=point, style=invis];\n";
    for (auto si : th.stages) {
      const auto& s = m_.stage(si);
      std::string label = describe_stage(s);
      if (o_.include_annotations && s.annotation)
        label += " (" + std::to_string(*s.annotation) + ")";
      os_ << pad << "  " << dot_quote(s.id) << " [label=" << dot_quote(label);
      if (auto it = highlight_.find(si.value); it != highlight_.end())
        os_ << ", style=filled, fillcolor=" << dot_quote(it->second);
      os_ << "];\n";
    }
    for (auto c : th.children) cluster(c, depth + 1);
    os_ << pad << "}\n";
  }

  void overlays() {
    for (std::size_t e = 0; e < m_.events().size(); ++e) {
      const auto& ev = m_.events()[e];
      auto color = dot_quote(color_for(e));
      auto node = dot_quote("event:" + ev.id);
      std::string label = ev.id;
      if (!ev.description.empty()) label += "\n" + ev.description;
      os_ << "  " << node << " [shape=note, color=" << color << ", fontcolor=" << color
          << ", label=" << dot_quote(label) << "];\n";
      for (auto s : resolve_region(m_, ev))
        os_ << "  " << node << " -> " << dot_quote(m_.stage(s).id)
            << " [style=dotted, arrowhead=none, color=" << color << "];\n";
    }
  }

  void behavior() {
    if (!m_.events().empty()) os_ << "  node [shape=box, style=rounded];\n";
    for (const auto& ev : m_.events()) {
      std::string label = ev.id;
      if (!ev.description.empty()) label += "\n" + ev.description;
      os_ << "  " << dot_quote(ev.id) << " [label=" << dot_quote(label) << "];\n";
    }
    for (const auto& b : m_.behavior())
      os_ << "  " << dot_quote(b.from) << " -> " << dot_quote(b.to) << ";\n";
  }

  const Model& m_;
  const RenderOptions& o_;
  std::map<std::uint32_t, std::string_view> highlight_;
  std::ostringstream os_;
};

}  // namespace detail

inline std::string to_dot(const Model& m, const RenderOptions& options = {}) {
  return detail::DotWriter(m, options).run();
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::ordered_json;

class ImportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kModelFormat = "tmkit-model";
inline constexpr std::string_view kLogFormat = "tmkit-simlog";
inline constexpr std::string_view kReportFormat = "tmkit-report";
inline constexpr int kJsonVersion = 1;

namespace detail {

inline Json thimac_json(const Model& m, ThimacIndex t) {
  const auto& th = m.thimac(t);
  Json j;
  j["id"] = th.id;
  j["display_name"] = th.display_name;
  Json stages = Json::array();
  for (auto si : th.stages) {
    const auto& s = m.stage(si);
    Json js;
    js["kind"] = std::string(to_string(s.kind));
    js["direction"] = std::string(to_string(s.direction));
    js["cost"] = s.cost_ticks;
    js["annotation"] = s.annotation ? Json(*s.annotation) : Json(nullptr);
    stages.push_back(std::move(js));
  }
  j["stages"] = std::move(stages);
  Json children = Json::array();
  for (auto c : th.children) children.push_back(thimac_json(m, c));
  j["children"] = std::move(children);
  return j;
}

template <class Arrow>
Json arrow_json(const Model& m, const Arrow& a) {
  Json j;
  j["id"] = a.id;
  j["from"] = m.stage(a.from).id;
  j["to"] = m.stage(a.to).id;
  j["label"] = a.label ? Json(*a.label) : Json(nullptr);
  j["annotation"] = a.annotation ? Json(*a.annotation) : Json(nullptr);
  return j;
}

template <class T>
std::optional<T> optional_field(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline void import_thimac(ModelBuilder& b, std::optional<ThimacIndex> parent, const Json& j) {
  auto t = b.add_thimac(parent, j.at("id").get<std::string>(),
                        j.value("display_name", std::string{}));
  for (const auto& s : j.at("stages")) {
    auto kind = parse_action_kind(s.at("kind").get<std::string>());
    auto dir_text = s.value("direction", std::string("none"));
    auto dir = dir_text == "none" ? std::optional(Direction::none) : parse_direction(dir_text);
    if (!kind || !dir) throw ImportError("bad stage kind or direction");
    b.add_stage(t, *kind, *dir, s.value("cost", 1u), optional_field<int>(s, "annotation"));
  }
  for (const auto& c : j.at("children")) import_thimac(b, t, c);
}

}  // namespace detail

inline Json to_json_value(const Model& m) {
  Json j;
  j["format"] = std::string(kModelFormat);
  j["version"] = kJsonVersion;
  j["name"] = m.name();
  Json thimacs = Json::array();
  for (auto r : m.roots()) thimacs.push_back(detail::thimac_json(m, r));
  j["thimacs"] = std::move(thimacs);
  Json flows = Json::array();
  for (const auto& f : m.flows()) flows.push_back(detail::arrow_json(m, f));
  j["flows"] = std::move(flows);
  Json triggers = Json::array();
  for (const auto& t : m.triggers()) triggers.push_back(detail::arrow_json(m, t));
  j["triggers"] = std::move(triggers);
  Json events = Json::array();
  for (const auto& e : m.events()) {
    Json je;
    je["id"] = e.id;
    je["description"] = e.description;
    je["region"] = e.region;
    je["order"] = e.time.declared_order ? Json(*e.time.declared_order) : Json(nullptr);
    je["duration"] = e.time.duration_hint ? Json(*e.time.duration_hint) : Json(nullptr);
    events.push_back(std::move(je));
  }
  j["events"] = std::move(events);
  Json behavior = Json::array();
  for (const auto& b : m.behavior()) behavior.push_back(Json{{"from", b.from}, {"to", b.to}});
  j["behavior"] = std::move(behavior);
  return j;
}

inline std::string to_json(const Model& m) { return to_json_value(m).dump(2) + "\n"; }

/// Inverse of to_json(Model). Throws ImportError on malformed documents and
/// BuildError when the content breaks a model invariant.
inline Model model_from_json(std::string_view text) {
  try {
    auto j = Json::parse(text);
    if (j.at("format").get<std::string>() != kModelFormat)
      throw ImportError("not a tmkit model document");
    if (j.at("version").get<int>() != kJsonVersion) throw ImportError("unsupported version");
    ModelBuilder b(j.at("name").get<std::string>());
    for (const auto& t : j.at("thimacs")) detail::import_thimac(b, std::nullopt, t);
    for (const auto& f : j.at("flows"))
      b.add_flow(FlowDecl{f.at("from").get<std::string>(), f.at("to").get<std::string>(),
                          detail::optional_field<std::string>(f, "label"),
                          detail::optional_field<int>(f, "annotation")});
    for (const auto& t : j.at("triggers"))
      b.add_trigger(TriggerDecl{t.at("from").get<std::string>(), t.at("to").get<std::string>(),
                                detail::optional_field<std::string>(t, "label"),
                                detail::optional_field<int>(t, "annotation")});
    for (const auto& e : j.at("events")) {
      Event ev;
      ev.id = e.at("id").get<std::string>();
      ev.description = e.value("description", std::string{});
      ev.region = e.at("region").get<std::vector<std::string>>();
      ev.time.declared_order = detail::optional_field<std::uint32_t>(e, "order");
      ev.time.duration_hint = detail::optional_field<std::uint32_t>(e, "duration");
      b.add_event(std::move(ev));
    }
    for (const auto& e : j.at("behavior"))
      b.add_behavior({e.at("from").get<std::string>(), e.at("to").get<std::string>()});
    return b.build();
  } catch (const nlohmann::json::exception& e) {
    throw ImportError(e.what());
  }
}

inline Json to_json_value(const SimConfig& c) {
  Json j;
  j["max_ticks"] = c.max_ticks;
  j["seed"] = c.seed;
  Json sources = Json::array();
  for (const auto& s : c.sources) sources.push_back(Json{{"stage", s.stage}, {"ticks", s.ticks}});
  j["sources"] = std::move(sources);
  return j;
}

/// Reads {"max_ticks": N, "seed": S, "sources": [{"stage": path, "ticks": [..]}]}.
inline SimConfig sim_config_from_json(std::string_view text) {
  try {
    auto j = Json::parse(text);
    SimConfig c;
    c.max_ticks = j.value("max_ticks", c.max_ticks);
    c.seed = j.value("seed", c.seed);
    for (const auto& s : j.value("sources", Json::array()))
      c.sources.push_back({s.at("stage").get<std::string>(), s.at("ticks").get<std::vector<Tick>>()});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ImportError(e.what());
  }
}

inline std::string to_json(const SimLog& log) {
  Json j;
  j["format"] = std::string(kLogFormat);
  j["version"] = kJsonVersion;
  j["fingerprint"] = log.model_fingerprint;
  j["config"] = to_json_value(log.config_echo);
  j["notes"] = log.notes;
  Json acts = Json::array();
  for (const auto& a : log.activations)
    acts.push_back(Json{{"tick", a.tick}, {"stage", a.stage}, {"token", a.token}, {"pulse", a.pulse}});
  j["activations"] = std::move(acts);
  Json metas = Json::array();
  for (const auto& r : log.meta_events)
    metas.push_back(Json{{"event", r.event_id},
                         {"occurrence", r.occurrence_index},
                         {"start", r.start_tick},
                         {"end", r.end_tick},
                         {"tokens", r.tokens},
                         {"notes", r.notes}});
  j["meta_events"] = std::move(metas);
  const auto& c = log.census;
  j["census"] = Json{{"created", c.created},         {"emitted", c.emitted},
                     {"trigger_births", c.trigger_births}, {"fanout_copies", c.fanout_copies},
                     {"departed", c.departed},       {"active_at_halt", c.active_at_halt},
                     {"pulses", c.pulses}};
  return j.dump(2) + "\n";
}

inline std::string to_json(const ValidationReport& r) {
  Json j;
  j["format"] = std::string(kReportFormat);
  j["version"] = kJsonVersion;
  j["valid"] = !r.has_errors();
  j["errors"] = r.error_count();
  j["warnings"] = r.warning_count();
  Json vs = Json::array();
  for (const auto& v : r.violations)
    vs.push_back(Json{{"code", std::string(to_string(v.code))},
                      {"severity", std::string(to_string(v.severity))},
                      {"subject", v.subject},
                      {"message", v.message}});
  j["violations"] = std::move(vs);
  return j.dump(2) + "\n";
}

}  // namespace tmkit
