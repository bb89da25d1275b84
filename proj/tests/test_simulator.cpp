#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "support/generator.hpp"
#include "support/oracles.hpp"
#include "tmkit/exporter.hpp"
#include "tmkit/simulator.hpp"

using namespace tmkit;

namespace {

Model from_source(const std::string& src) {
  auto r = parse(src);
  if (!r.ok()) throw std::runtime_error(format(r.diagnostics.front()));
  return std::move(*r.model);
}

SimConfig corpus_config(const std::string& name) {
  return sim_config_from_json(tmtest::read_text(tmtest::fixture_path(name)));
}

SimConfig one_source(const std::string& stage, std::vector<Tick> ticks, Tick max_ticks = 100) {
  SimConfig c;
  c.max_ticks = max_ticks;
  c.sources.push_back({stage, std::move(ticks)});
  return c;
}

const char* kChain = R"(model M {
  thimac A { stage create stage process stage release }
  flow A.create -> A.process
  flow A.process -> A.release
  event E1 { region [A.create, A.process, A.release] }
}
)";

// Independent expansion of every activation a source emission causes: each
// token activation forwards along every flow after the stage's cost and every
// activation fires each trigger one tick later. Valid for acyclic arrow graphs.
using ActKey = std::tuple<Tick, std::string, bool>;

void expand(const Model& m, const std::string& stage, Tick t, bool pulse, Tick horizon,
            std::multiset<ActKey>& out) {
  if (t >= horizon) return;
  out.emplace(t, stage, pulse);
  const auto& stages = m.stages();
  auto cost_of = [&](const std::string& path) {
    for (const auto& s : stages)
      if (s.id == path) return s.cost_ticks;
    return 0u;
  };
  if (!pulse)
    for (const auto& f : m.flows())
      if (stages[f.from.value].id == stage)
        expand(m, stages[f.to.value].id, t + cost_of(stage), false, horizon, out);
  for (const auto& tr : m.triggers())
    if (stages[tr.from.value].id == stage) {
      const auto& target = stages[tr.to.value];
      expand(m, target.id, t + 1, target.kind != ActionKind::create, horizon, out);
    }
}

std::multiset<ActKey> expected_activations(const Model& m, const SimConfig& cfg) {
  std::multiset<ActKey> out;
  for (const auto& s : cfg.sources)
    for (auto t : s.ticks) expand(m, s.stage, t, false, cfg.max_ticks, out);
  return out;
}

std::multiset<ActKey> actual_activations(const SimLog& log) {
  std::multiset<ActKey> out;
  for (const auto& a : log.activations) out.emplace(a.tick, a.stage, a.pulse);
  return out;
}

}  // namespace

TEST(Simulate, TrivialChain) {
  auto m = from_source(kChain);
  auto log = simulate(m, one_source("A.create", {0}));
  ASSERT_EQ(log.activations.size(), 3u);
  EXPECT_EQ(log.activations[0], (Activation{0, "A.create", 1, false}));
  EXPECT_EQ(log.activations[1], (Activation{1, "A.process", 1, false}));
  EXPECT_EQ(log.activations[2], (Activation{2, "A.release", 1, false}));
  ASSERT_EQ(log.meta_events.size(), 1u);
  EXPECT_EQ(log.meta_events[0].event_id, "E1");
  EXPECT_EQ(log.meta_events[0].occurrence_index, 1u);
  EXPECT_EQ(log.meta_events[0].start_tick, 0u);
  EXPECT_EQ(log.meta_events[0].end_tick, 2u);
  EXPECT_EQ(log.meta_events[0].tokens, std::vector<TokenId>{1});
  EXPECT_EQ(log.census.created, 1u);
  EXPECT_EQ(log.census.departed, 1u);
  EXPECT_EQ(log.census.active_at_halt, 0u);
}

TEST(Simulate, StageCostDelaysDeparture) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage process cost 5 stage release }
  flow A.create -> A.process
  flow A.process -> A.release
})");
  auto log = simulate(m, one_source("A.create", {2}));
  ASSERT_EQ(log.activations.size(), 3u);
  EXPECT_EQ(log.activations[1].tick, 3u);
  EXPECT_EQ(log.activations[2].tick, 8u);
}

TEST(Simulate, RepeatedEmissionsGiveRepeatedOccurrences) {
  auto m = from_source(kChain);
  auto log = simulate(m, one_source("A.create", {0, 10, 20}));
  ASSERT_EQ(log.meta_events.size(), 3u);
  EXPECT_EQ(log.meta_events[2].occurrence_index, 3u);
  EXPECT_EQ(log.meta_events[2].start_tick, 20u);
  EXPECT_EQ(occurrence_counts(log, m), (std::vector<std::pair<std::string, std::size_t>>{{"E1", 3}}));
}

TEST(Simulate, DurationHintOverrunIsNoted) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage process cost 4 stage release }
  flow A.create -> A.process
  flow A.process -> A.release
  event E1 { region [A.create, A.process, A.release] duration 2 }
})");
  auto log = simulate(m, one_source("A.create", {0}));
  ASSERT_EQ(log.meta_events.size(), 1u);
  ASSERT_EQ(log.meta_events[0].notes.size(), 1u);
  EXPECT_EQ(log.meta_events[0].notes[0], "duration 5 exceeds hint 2");
}

TEST(Simulate, FanOutCopiesTheToken) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage release stage transfer out }
  thimac B { stage transfer in stage receive }
  thimac C { stage transfer in stage receive }
  flow A.create -> A.release
  flow A.release -> A.transfer.out
  flow A.transfer.out -> B.transfer.in "left"
  flow A.transfer.out -> C.transfer.in
  flow B.transfer.in -> B.receive
  flow C.transfer.in -> C.receive
})");
  SimConfig cfg = one_source("A.create", {0});
  auto log = simulate(m, cfg);
  EXPECT_EQ(log.census.emitted, 1u);
  EXPECT_EQ(log.census.fanout_copies, 1u);
  EXPECT_EQ(log.census.created, 2u);
  EXPECT_EQ(log.census.departed, 2u);
  ASSERT_EQ(log.tokens.size(), 2u);
  EXPECT_EQ(log.tokens[0].label, "left");
  EXPECT_EQ(log.tokens[1].label, "");
  EXPECT_EQ(actual_activations(log), expected_activations(m, cfg));
}

TEST(Simulate, TriggersBirthOrPulse) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage release }
  thimac B { stage create stage release }
  thimac C { stage receive stage process }
  flow A.create -> A.release
  flow B.create -> B.release
  flow C.receive -> C.process
  trigger A.release ~> B.create "order"
  trigger A.release ~> C.process
})");
  SimConfig cfg = one_source("A.create", {0});
  auto log = simulate(m, cfg);
  EXPECT_EQ(log.census.trigger_births, 1u);
  EXPECT_EQ(log.census.pulses, 1u);
  EXPECT_EQ(log.census.created, 2u);
  EXPECT_EQ(log.tokens[1].label, "order");
  std::size_t pulses = 0;
  for (const auto& a : log.activations)
    if (a.pulse) {
      ++pulses;
      EXPECT_EQ(a.stage, "C.process");
      EXPECT_EQ(a.tick, 2u);
    }
  EXPECT_EQ(pulses, 1u);
  EXPECT_EQ(actual_activations(log), expected_activations(m, cfg));
}

TEST(Simulate, ActivationsWithinATickAreSortedByStageThenToken) {
  auto m = from_source(R"(model M {
  thimac Z { stage create stage release }
  thimac A { stage create stage release }
  flow Z.create -> Z.release
  flow A.create -> A.release
})");
  SimConfig cfg;
  cfg.sources = {{"Z.create", {0}}, {"A.create", {0}}};
  auto log = simulate(m, cfg);
  ASSERT_EQ(log.activations.size(), 4u);
  EXPECT_EQ(log.activations[0].stage, "A.create");
  EXPECT_EQ(log.activations[1].stage, "Z.create");
  EXPECT_EQ(log.activations[2].stage, "A.release");
  EXPECT_EQ(log.activations[3].stage, "Z.release");
}

TEST(Simulate, CorporaReplayEveryEventWithoutViolations) {
  for (const char* name : {"berthing", "cof"}) {
    auto m = tmtest::load_fixture(std::string(name) + ".tm");
    auto cfg = corpus_config(std::string(name) + ".sim.json");
    auto start = std::chrono::steady_clock::now();
    auto log = simulate(m, cfg);
    auto elapsed = std::chrono::steady_clock::now() - start;
    for (const auto& [id, n] : occurrence_counts(log, m)) EXPECT_GE(n, 1u) << name << " " << id;
    auto r = check_behavioral_consistency(log, m);
    EXPECT_TRUE(r.valid()) << name << ": " << (r.violations.empty() ? "" : format(r.violations[0]));
    EXPECT_LT(elapsed, std::chrono::seconds(5)) << name;
  }
}

TEST(Simulate, CorpusOccurrencesFollowDeclaredOrder) {
  for (const char* name : {"berthing", "cof"}) {
    auto m = tmtest::load_fixture(std::string(name) + ".tm");
    auto log = simulate(m, corpus_config(std::string(name) + ".sim.json"));
    for (const auto& e : m.behavior()) {
      const auto* a = first_occurrence(log, e.from);
      const auto* b = first_occurrence(log, e.to);
      ASSERT_TRUE(a && b);
      EXPECT_LE(a->end_tick, b->start_tick) << name << " " << e.from << "->" << e.to;
    }
  }
}

TEST(Simulate, RunsAreByteIdentical) {
  for (const char* name : {"berthing", "cof"}) {
    auto m = tmtest::load_fixture(std::string(name) + ".tm");
    auto cfg = corpus_config(std::string(name) + ".sim.json");
    auto a = to_text(simulate(m, cfg));
    auto b = to_text(simulate(m, cfg));
    auto c = to_text(simulate(m, cfg));
    EXPECT_EQ(a, b);
    EXPECT_EQ(b, c);
    EXPECT_EQ(to_json(simulate(m, cfg)), to_json(simulate(m, cfg)));
  }
}

TEST(Simulate, BerthingMatchesGoldenLog) {
  auto m = tmtest::load_fixture("berthing.tm");
  auto text = to_text(simulate(m, corpus_config("berthing.sim.json")));
  auto golden = tmtest::read_text(tmtest::fixture_path("golden/berthing.simlog"));
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(text, golden);
}

TEST(Simulate, MatchesExpansionOracleOnGeneratedModels) {
  tmtest::GeneratorOptions o;
  o.max_top_level = 3;
  o.max_children = 2;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto m = tmtest::ModelGenerator(seed, o).generate();
    auto cfg = tmtest::random_config(m, seed, 30);
    auto log = simulate(m, cfg);
    ASSERT_EQ(actual_activations(log), expected_activations(m, cfg)) << "seed " << seed;
  }
}

TEST(Conservation, GeneratedModels) {
  std::size_t nontrivial = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    auto m = tmtest::ModelGenerator(seed).generate();
    ASSERT_FALSE(validate_all(m).has_errors()) << "seed " << seed;
    auto log = simulate(m, tmtest::random_config(m, seed));
    const auto& c = log.census;
    ASSERT_EQ(c.created, c.emitted + c.trigger_births + c.fanout_copies) << "seed " << seed;
    ASSERT_EQ(c.created, c.departed + c.active_at_halt) << "seed " << seed;

    // Recount from the raw log rather than the census.
    std::set<TokenId> seen;
    std::uint64_t pulses = 0;
    for (const auto& a : log.activations) {
      if (a.pulse) ++pulses;
      else seen.insert(a.token);
    }
    ASSERT_EQ(seen.size(), c.created) << "seed " << seed;
    ASSERT_EQ(pulses, c.pulses) << "seed " << seed;
    std::uint64_t departed = 0;
    for (const auto& t : log.tokens) departed += t.state == TokenState::departed;
    ASSERT_EQ(departed, c.departed) << "seed " << seed;
    if (c.created > 0) ++nontrivial;
  }
  EXPECT_GT(nontrivial, 250u);
}

TEST(Conservation, HaltMidFlightLeavesActiveTokens) {
  auto m = from_source(kChain);
  auto log = simulate(m, one_source("A.create", {0, 1}, 2));
  EXPECT_EQ(log.census.created, 2u);
  EXPECT_EQ(log.census.departed, 0u);
  EXPECT_EQ(log.census.active_at_halt, 2u);
}

TEST(MetaEvents, TokensAndStagesComeFromTheLog) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto m = tmtest::ModelGenerator(seed).generate();
    auto log = simulate(m, tmtest::random_config(m, seed));
    for (const auto& a : log.activations) ASSERT_TRUE(m.find_stage(a.stage)) << a.stage;
    for (const auto& r : log.meta_events) {
      const auto* e = m.find_event(r.event_id);
      ASSERT_NE(e, nullptr);
      ASSERT_LE(r.start_tick, r.end_tick);
      std::set<std::string> region(e->region.begin(), e->region.end());
      for (auto tok : r.tokens) {
        bool found = false;
        for (const auto& a : log.activations)
          if (a.token == tok && region.count(a.stage) && a.tick >= r.start_tick &&
              a.tick <= r.end_tick)
            found = true;
        ASSERT_TRUE(found) << "seed " << seed << " " << r.event_id << " token " << tok;
      }
      // Full coverage: every region stage activated inside the span.
      for (const auto& s : region) {
        bool hit = false;
        for (const auto& a : log.activations)
          if (a.stage == s && a.tick >= r.start_tick && a.tick <= r.end_tick) hit = true;
        ASSERT_TRUE(hit) << "seed " << seed << " " << r.event_id << " " << s;
      }
    }
  }
}

TEST(Consistency, SyntheticViolationIsReported) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage release }
  thimac B { stage create stage release }
  flow A.create -> A.release
  flow B.create -> B.release
  event EA { region [A.create, A.release] }
  event EB { region [B.create, B.release] }
  behavior EA -> EB
})");
  SimConfig cfg;
  cfg.sources = {{"A.create", {5}}, {"B.create", {0}}};
  auto log = simulate(m, cfg);
  auto r = check_behavioral_consistency(log, m);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].code, RuleCode::behavior_order_violation);
  EXPECT_EQ(r.violations[0].subject, "EA->EB");

  cfg.sources = {{"A.create", {0}}, {"B.create", {1}}};
  EXPECT_TRUE(check_behavioral_consistency(simulate(m, cfg), m).valid());
}

TEST(Consistency, EmptyLogIsVacuouslyConsistent) {
  auto m = tmtest::load_fixture("berthing.tm");
  SimConfig cfg;
  auto log = simulate(m, cfg);
  EXPECT_TRUE(log.activations.empty());
  EXPECT_TRUE(check_behavioral_consistency(log, m).valid());
}

TEST(Consistency, LogFromAnotherModelIsRejected) {
  auto berthing = tmtest::load_fixture("berthing.tm");
  auto cof = tmtest::load_fixture("cof.tm");
  auto log = simulate(cof, corpus_config("cof.sim.json"));
  try {
    check_behavioral_consistency(log, berthing);
    FAIL() << "expected SimulationError";
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.code(), SimErrc::mismatched_log);
  }
}

TEST(ReplayWindow, FullWindowIsIdentity) {
  auto m = tmtest::load_fixture("cof.tm");
  auto log = simulate(m, corpus_config("cof.sim.json"));
  EXPECT_EQ(replay_window(log, 0, log.config_echo.max_ticks), log);
}

TEST(ReplayWindow, BeyondHorizonIsEmpty) {
  auto m = tmtest::load_fixture("cof.tm");
  auto log = simulate(m, corpus_config("cof.sim.json"));
  auto w = replay_window(log, log.config_echo.max_ticks, log.config_echo.max_ticks + 10);
  EXPECT_TRUE(w.activations.empty());
  EXPECT_TRUE(w.meta_events.empty());
}

TEST(ReplayWindow, MatchesBruteFilter) {
  auto m = tmtest::load_fixture("berthing.tm");
  auto log = simulate(m, corpus_config("berthing.sim.json"));
  for (Tick from = 0; from < 70; from += 7)
    for (Tick to = from; to < 70; to += 11) {
      auto w = replay_window(log, from, to);
      std::size_t acts = 0, metas = 0;
      for (const auto& a : log.activations) acts += a.tick >= from && a.tick <= to;
      for (const auto& r : log.meta_events) metas += !(r.end_tick < from || r.start_tick > to);
      EXPECT_EQ(w.activations.size(), acts) << from << ".." << to;
      EXPECT_EQ(w.meta_events.size(), metas) << from << ".." << to;
    }
  EXPECT_THROW(replay_window(log, 5, 4), std::invalid_argument);
}

TEST(SimulateErrors, InvalidModelIsRefused) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage process }
  flow A.process -> A.create
})");
  try {
    simulate(m, one_source("A.create", {0}));
    FAIL() << "expected SimulationError";
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.code(), SimErrc::unvalidated_model);
  }
}

TEST(SimulateErrors, BadSourcesAreInvalidConfig) {
  auto m = from_source(kChain);
  for (const char* stage : {"A.process", "Q.create"}) {
    try {
      simulate(m, one_source(stage, {0}));
      ADD_FAILURE() << stage;
    } catch (const SimulationError& e) {
      EXPECT_EQ(e.code(), SimErrc::invalid_config) << stage;
    }
  }
}

TEST(SimulateEdges, ZeroHorizonGivesEmptyLog) {
  auto m = from_source(kChain);
  auto log = simulate(m, one_source("A.create", {0}, 0));
  EXPECT_TRUE(log.activations.empty());
  EXPECT_TRUE(log.meta_events.empty());
  EXPECT_EQ(log.census.created, 0u);
  ASSERT_EQ(log.notes.size(), 1u);
  EXPECT_NE(log.notes[0].find("beyond the horizon"), std::string::npos);
}

TEST(SimulateEdges, NoSourcesIsNoted) {
  auto m = from_source(kChain);
  auto log = simulate(m, SimConfig{});
  EXPECT_TRUE(log.activations.empty());
  ASSERT_EQ(log.notes.size(), 1u);
  EXPECT_NE(log.notes[0].find("no sources"), std::string::npos);
}

TEST(SimulateEdges, EmissionsBeyondHorizonAreDroppedWithANote) {
  auto m = from_source(kChain);
  auto log = simulate(m, one_source("A.create", {0, 50}, 10));
  EXPECT_EQ(log.census.emitted, 1u);
  EXPECT_EQ(log.notes.size(), 1u);
}

TEST(SimLogText, HeaderAndCensusLines) {
  auto m = from_source(kChain);
  auto text = to_text(simulate(m, one_source("A.create", {0})));
  EXPECT_EQ(text.rfind("#tmkit-simlog\t1\n", 0), 0u);
  EXPECT_NE(text.find("config\tmax_ticks\t100\tseed\t0\tfingerprint\t" + fingerprint(m) + "\n"),
            std::string::npos);
  EXPECT_NE(text.find("act\t1\tA.process\t1\ttoken\n"), std::string::npos);
  EXPECT_NE(text.find("meta\tE1\t1\t0\t2\t1\t\n"), std::string::npos);
  EXPECT_NE(text.find("census\tcreated\t1\temitted\t1\t"), std::string::npos);
}

TEST(Fingerprint, StableAndSensitive) {
  auto a = tmtest::load_fixture("berthing.tm");
  auto b = tmtest::load_fixture("berthing.tm");
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a).size(), 16u);
  EXPECT_NE(fingerprint(a), fingerprint(tmtest::load_fixture("cof.tm")));
}
