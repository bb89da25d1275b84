#pragma once

// Deterministic discrete-tick token flow over a validated model.
//
// Each tick runs in three phases:
//   1. tokens whose dwell time has elapsed leave their stage along every
//      outgoing flow (one flow: move; k flows: k-1 copies; none: depart);
//   2. scheduled source emissions, trigger births and trigger pulses are
//      materialised and receive token ids;
//   3. all arrivals of the tick are recorded as activations in (stage id,
//      token id) order, which also drives event detection. Stages with
//      outgoing triggers schedule their targets for the next tick.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/dynamics.hpp"
#include "tmkit/model.hpp"
#include "tmkit/parser.hpp"
#include "tmkit/validator.hpp"

namespace tmkit {

using Tick = std::uint32_t;
using TokenId = std::uint64_t;

struct Source {
  std::string stage;  // path of a create stage
  std::vector<Tick> ticks;

  friend bool operator==(const Source&, const Source&) = default;
};

struct SimConfig {
  Tick max_ticks = 1000;
  std::vector<Source> sources;
  std::uint64_t seed = 0;  // recorded only; the core is deterministic

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class TokenState : std::uint8_t { active, departed };

struct Token {
  TokenId id = 0;
  std::string label;
  Tick birth_tick = 0;
  StageIndex location;
  TokenState state = TokenState::active;
};

struct Activation {
  Tick tick = 0;
  std::string stage;
  TokenId token = 0;
  bool pulse = false;

  friend bool operator==(const Activation&, const Activation&) = default;
};

struct MetaEventRecord {
  std::string event_id;
  std::uint32_t occurrence_index = 0;
  Tick start_tick = 0;
  Tick end_tick = 0;
  std::vector<TokenId> tokens;
  std::vector<std::string> notes;

  friend bool operator==(const MetaEventRecord&, const MetaEventRecord&) = default;
};

/// Token bookkeeping at halt. `created` counts token records, independently of
/// the per-origin counters.
struct TokenCensus {
  std::uint64_t created = 0;
  std::uint64_t emitted = 0;
  std::uint64_t trigger_births = 0;
  std::uint64_t fanout_copies = 0;
  std::uint64_t departed = 0;
  std::uint64_t active_at_halt = 0;
  std::uint64_t pulses = 0;

  friend bool operator==(const TokenCensus&, const TokenCensus&) = default;
};

struct SimLog {
  std::vector<Activation> activations;
  std::vector<MetaEventRecord> meta_events;
  SimConfig config_echo;
  std::string model_fingerprint;
  std::vector<std::string> notes;
  TokenCensus census;
  std::vector<Token> tokens;  // final state, by id

  friend bool operator==(const SimLog& a, const SimLog& b) {
    return a.activations == b.activations && a.meta_events == b.meta_events &&
           a.config_echo == b.config_echo && a.model_fingerprint == b.model_fingerprint &&
           a.notes == b.notes && a.census == b.census;
  }
};

enum class SimErrc : std::uint8_t { unvalidated_model, invalid_config, mismatched_log };

class SimulationError : public std::runtime_error {
 public:
  SimulationError(SimErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  SimErrc code() const noexcept { return code_; }

 private:
  SimErrc code_;
};

/// FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string fingerprint(const Model& m) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize(m)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline void check_config(const Model& m, const SimConfig& cfg) {
  for (const auto& src : cfg.sources) {
    auto s = m.find_stage(src.stage);
    if (!s) throw SimulationError(SimErrc::invalid_config, "unknown source stage " + src.stage);
    if (m.stage(*s).kind != ActionKind::create)
      throw SimulationError(SimErrc::invalid_config, "source " + src.stage + " is not a create stage");
  }
}

namespace detail {

class Engine {
 public:
  Engine(const Model& m, const SimConfig& cfg) : m_(m), cfg_(cfg) {
    out_.resize(m.stages().size());
    trig_.resize(m.stages().size());
    for (std::uint32_t i = 0; i < m.flows().size(); ++i)
      out_[m.flows()[i].from.value].push_back(FlowIndex{i});
    for (std::uint32_t i = 0; i < m.triggers().size(); ++i)
      trig_[m.triggers()[i].from.value].push_back(TriggerIndex{i});
    regions_.resize(m.events().size());
    events_at_.resize(m.stages().size());
    for (std::size_t e = 0; e < m.events().size(); ++e) {
      regions_[e] = resolve_region(m, m.events()[e]);
      for (auto s : regions_[e]) events_at_[s.value].push_back(e);
    }
    detect_.resize(m.events().size());
  }

  SimLog run() {
    log_.config_echo = cfg_;
    log_.model_fingerprint = fingerprint(m_);
    schedule_sources();
    if (cfg_.sources.empty()) log_.notes.push_back("no sources configured; nothing to simulate");

    while (!agenda_.empty()) {
      auto it = agenda_.begin();
      Tick t = it->first;
      if (t >= cfg_.max_ticks) break;
      Work work = std::move(it->second);
      agenda_.erase(it);
      step(t, work);
    }
    finish();
    return std::move(log_);
  }

 private:
  struct Arrival {
    StageIndex stage;
    TokenId token;
    bool pulse;
  };
  struct Pending {
    StageIndex stage;
    std::string label;
    enum class Kind : std::uint8_t { emission, birth, pulse } kind;
  };
  struct Work {
    std::vector<TokenId> leaving;
    std::vector<Pending> pending;
  };
  struct Detection {
    bool open = false;
    Tick begin = 0;
    std::set<StageIndex> covered;
    std::set<TokenId> tokens;
    std::uint32_t count = 0;
  };

  void schedule_sources() {
    for (const auto& src : cfg_.sources) {
      auto s = *m_.find_stage(src.stage);
      for (auto t : src.ticks) {
        if (t >= cfg_.max_ticks) {
          log_.notes.push_back("emission from " + src.stage + " at tick " + std::to_string(t) +
                               " lies beyond the horizon");
          continue;
        }
        agenda_[t].pending.push_back({s, {}, Pending::Kind::emission});
      }
    }
  }

  TokenId mint(StageIndex at, Tick t, std::string label) {
    tmkit::Token tok;
    tok.id = next_id_++;
    tok.label = std::move(label);
    tok.birth_tick = t;
    tok.location = at;
    log_.tokens.push_back(std::move(tok));
    return log_.tokens.back().id;
  }

  tmkit::Token& token(TokenId id) { return log_.tokens[token_slot_.at(id)]; }

  void step(Tick t, Work& work) {
    std::vector<Arrival> arrivals;

    std::sort(work.leaving.begin(), work.leaving.end(), [&](TokenId a, TokenId b) {
      return std::tie(m_.stage(token(a).location).id, a) <
             std::tie(m_.stage(token(b).location).id, b);
    });
    for (auto id : work.leaving) {
      auto at = token(id).location;
      const auto& flows = out_[at.value];
      if (flows.empty()) {
        token(id).state = TokenState::departed;
        continue;
      }
      const std::string carried = token(id).label;
      for (std::size_t k = 0; k < flows.size(); ++k) {
        const auto& f = m_.flow(flows[k]);
        TokenId moving = id;
        if (k > 0) {
          moving = materialise(at, t, carried);
          ++log_.census.fanout_copies;
        }
        if (f.label) token(moving).label = *f.label;
        arrivals.push_back({f.to, moving, false});
      }
    }

    for (auto& p : work.pending) {
      switch (p.kind) {
        case Pending::Kind::emission:
          ++log_.census.emitted;
          arrivals.push_back({p.stage, materialise(p.stage, t, p.label), false});
          break;
        case Pending::Kind::birth:
          ++log_.census.trigger_births;
          arrivals.push_back({p.stage, materialise(p.stage, t, p.label), false});
          break;
        case Pending::Kind::pulse:
          ++log_.census.pulses;
          arrivals.push_back({p.stage, next_id_++, true});
          break;
      }
    }

    std::sort(arrivals.begin(), arrivals.end(), [&](const Arrival& a, const Arrival& b) {
      return std::tie(m_.stage(a.stage).id, a.token) < std::tie(m_.stage(b.stage).id, b.token);
    });
    for (const auto& a : arrivals) {
      log_.activations.push_back({t, m_.stage(a.stage).id, a.token, a.pulse});
      if (!a.pulse) {
        token(a.token).location = a.stage;
        agenda_[t + m_.stage(a.stage).cost_ticks].leaving.push_back(a.token);
      }
      for (auto ti : trig_[a.stage.value]) {
        const auto& tr = m_.trigger(ti);
        bool birth = m_.stage(tr.to).kind == ActionKind::create;
        agenda_[t + 1].pending.push_back(
            {tr.to, tr.label.value_or(""), birth ? Pending::Kind::birth : Pending::Kind::pulse});
      }
      detect(t, a);
    }
  }

  TokenId materialise(StageIndex at, Tick t, std::string label) {
    TokenId id = mint(at, t, std::move(label));
    token_slot_[id] = log_.tokens.size() - 1;
    return id;
  }

  void detect(Tick t, const Arrival& a) {
    for (auto e : events_at_[a.stage.value]) {
      auto& d = detect_[e];
      if (!d.open) {
        d.open = true;
        d.begin = t;
        d.covered.clear();
        d.tokens.clear();
      }
      d.covered.insert(a.stage);
      d.tokens.insert(a.token);
      if (d.covered.size() == regions_[e].size()) {
        const auto& ev = m_.events()[e];
        MetaEventRecord rec;
        rec.event_id = ev.id;
        rec.occurrence_index = ++d.count;
        rec.start_tick = d.begin;
        rec.end_tick = t;
        rec.tokens.assign(d.tokens.begin(), d.tokens.end());
        if (ev.time.duration_hint && t - d.begin > *ev.time.duration_hint)
          rec.notes.push_back("duration " + std::to_string(t - d.begin) + " exceeds hint " +
                              std::to_string(*ev.time.duration_hint));
        log_.meta_events.push_back(std::move(rec));
        d.open = false;
      }
    }
  }

  void finish() {
    auto& c = log_.census;
    c.created = log_.tokens.size();
    for (const auto& tok : log_.tokens) {
      if (tok.state == TokenState::departed) ++c.departed;
      else ++c.active_at_halt;
    }
  }

  const Model& m_;
  const SimConfig& cfg_;
  std::vector<std::vector<FlowIndex>> out_;
  std::vector<std::vector<TriggerIndex>> trig_;
  std::vector<std::vector<StageIndex>> regions_;
  std::vector<std::vector<std::size_t>> events_at_;
  std::vector<Detection> detect_;
  std::map<Tick, Work> agenda_;
  std::map<TokenId, std::size_t> token_slot_;
  TokenId next_id_ = 1;
  SimLog log_;
};

}  // namespace detail

/// Runs the tick machine. Throws SimulationError when the model does not pass
/// the strict validators or the configuration names an unusable source.
inline SimLog simulate(const Model& m, const SimConfig& cfg) {
  auto report = validate_all(m, Mode::strict);
  if (report.has_errors())
    throw SimulationError(SimErrc::unvalidated_model,
                          "model has " + std::to_string(report.error_count()) +
                              " validation error(s)");
  check_config(m, cfg);
  return detail::Engine(m, cfg).run();
}

inline const MetaEventRecord* first_occurrence(const SimLog& log, std::string_view event) {
  for (const auto& r : log.meta_events)
    if (r.event_id == event && r.occurrence_index == 1) return &r;
  return nullptr;
}

/// Declared A->B requires A's first occurrence to end no later than B's first
/// occurrence starts, whenever both occur.
inline ValidationReport check_behavioral_consistency(const SimLog& log, const Model& m) {
  if (log.model_fingerprint != fingerprint(m))
    throw SimulationError(SimErrc::mismatched_log, "log was produced from a different model");
  ValidationReport r;
  for (const auto& e : m.behavior()) {
    ++r.checked_rules;
    const auto* a = first_occurrence(log, e.from);
    const auto* b = first_occurrence(log, e.to);
    if (!a || !b) continue;
    if (a->end_tick > b->start_tick)
      r.add(RuleCode::behavior_order_violation, edge_subject(e),
            e.from + " ends at tick " + std::to_string(a->end_tick) + " after " + e.to +
                " starts at tick " + std::to_string(b->start_tick));
  }
  r.canonicalize();
  return r;
}

/// Projection onto [from_tick, to_tick]; meta-events are kept when their span
/// intersects the window.
inline SimLog replay_window(const SimLog& log, Tick from_tick, Tick to_tick) {
  if (from_tick > to_tick) throw std::invalid_argument("replay window is inverted");
  SimLog out;
  out.config_echo = log.config_echo;
  out.model_fingerprint = log.model_fingerprint;
  out.notes = log.notes;
  out.census = log.census;
  out.tokens = log.tokens;
  for (const auto& a : log.activations)
    if (a.tick >= from_tick && a.tick <= to_tick) out.activations.push_back(a);
  for (const auto& r : log.meta_events)
    if (r.start_tick <= to_tick && r.end_tick >= from_tick) out.meta_events.push_back(r);
  return out;
}

/// Occurrence count per declared event, in declaration order.
inline std::vector<std::pair<std::string, std::size_t>> occurrence_counts(const SimLog& log,
                                                                          const Model& m) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& e : m.events()) {
    std::size_t n = 0;
    for (const auto& r : log.meta_events) n += r.event_id == e.id;
    out.emplace_back(e.id, n);
  }
  return out;
}

/// Line-delimited, tab-separated log. Byte-stable for golden comparison.
inline std::string to_text(const SimLog& log) {
  std::ostringstream os;
  os << "#tmkit-simlog\t1\n";
  os << "config\tmax_ticks\t" << log.config_echo.max_ticks << "\tseed\t" << log.config_echo.seed
     << "\tfingerprint\t" << log.model_fingerprint << '\n';
  for (const auto& s : log.config_echo.sources) {
    os << "source\t" << s.stage << '\t';
    for (std::size_t i = 0; i < s.ticks.size(); ++i) os << (i ? "," : "") << s.ticks[i];
    os << '\n';
  }
  for (const auto& n : log.notes) os << "note\t" << n << '\n';
  for (const auto& a : log.activations)
    os << "act\t" << a.tick << '\t' << a.stage << '\t' << a.token << '\t'
       << (a.pulse ? "pulse" : "token") << '\n';
  for (const auto& r : log.meta_events) {
    os << "meta\t" << r.event_id << '\t' << r.occurrence_index << '\t' << r.start_tick << '\t'
       << r.end_tick << '\t';
    for (std::size_t i = 0; i < r.tokens.size(); ++i) os << (i ? "," : "") << r.tokens[i];
    os << '\t';
    for (std::size_t i = 0; i < r.notes.size(); ++i) os << (i ? "; " : "") << r.notes[i];
    os << '\n';
  }
  const auto& c = log.census;
  os << "census\tcreated\t" << c.created << "\temitted\t" << c.emitted << "\ttrigger_births\t"
     << c.trigger_births << "\tfanout_copies\t" << c.fanout_copies << "\tdeparted\t" << c.departed
     << "\tactive\t" << c.active_at_halt << "\tpulses\t" << c.pulses << '\n';
  return os.str();
}

}  // namespace tmkit
