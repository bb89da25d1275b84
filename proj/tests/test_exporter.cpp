#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "support/dot_acceptor.hpp"
#include "support/generator.hpp"
#include "support/oracles.hpp"
#include "tmkit/exporter.hpp"

using namespace tmkit;

namespace {

Model from_source(const std::string& src) {
  auto r = parse(src);
  if (!r.ok()) throw std::runtime_error(format(r.diagnostics.front()));
  return std::move(*r.model);
}

RenderOptions view(View v) {
  RenderOptions o;
  o.view = v;
  return o;
}

std::size_t count_style(const tmtest::DotGraph& g, const std::string& style) {
  return static_cast<std::size_t>(std::count_if(g.edges.begin(), g.edges.end(), [&](const auto& e) {
    auto it = e.attrs.find("style");
    return it != e.attrs.end() && it->second == style;
  }));
}

}  // namespace

TEST(Dot, EmptyModelIsAnEmptyDigraph) {
  auto text = to_dot(Model("M"));
  EXPECT_EQ(text, "digraph \"M\" {\n}\n");
  auto g = tmtest::accept_dot(text);
  ASSERT_TRUE(g.ok) << g.error;
  EXPECT_TRUE(g.nodes.empty());
  EXPECT_TRUE(g.edges.empty());
}

TEST(Dot, BerthingClustersCarryDisplayNames) {
  auto m = tmtest::load_fixture("berthing.tm");
  auto text = to_dot(m);
  for (const char* name : {"Vessel", "Marine Agency", "Head Office", "Port", "Ship Tender"})
    EXPECT_NE(text.find(std::string("label=\"") + name + "\";"), std::string::npos) << name;
  auto g = tmtest::accept_dot(text);
  ASSERT_TRUE(g.ok) << g.error;
  EXPECT_EQ(g.clusters, m.thimacs().size());
}

TEST(Dot, StaticViewCensus) {
  for (const char* name : {"berthing.tm", "cof.tm"}) {
    auto m = tmtest::load_fixture(name);
    auto g = tmtest::accept_dot(to_dot(m));
    ASSERT_TRUE(g.ok) << name << ": " << g.error;
    EXPECT_EQ(g.nodes.size(), m.stages().size() + m.thimacs().size()) << name;
    EXPECT_EQ(g.edges.size(), m.flows().size() + m.triggers().size()) << name;
    EXPECT_EQ(count_style(g, "dashed"), m.triggers().size()) << name;
    for (const auto& s : m.stages()) EXPECT_TRUE(g.nodes.count(s.id)) << s.id;
  }
}

TEST(Dot, DynamicViewAddsEventNotes) {
  auto m = tmtest::load_fixture("berthing.tm");
  auto g = tmtest::accept_dot(to_dot(m, view(View::dynamic_view)));
  ASSERT_TRUE(g.ok) << g.error;
  EXPECT_EQ(g.nodes.size(), m.stages().size() + m.thimacs().size() + m.events().size());
  std::size_t members = 0;
  for (const auto& e : m.events()) {
    EXPECT_TRUE(g.nodes.count("event:" + e.id)) << e.id;
    members += e.region.size();
  }
  EXPECT_EQ(count_style(g, "dotted"), members);
}

TEST(Dot, BehaviorViewHasOneNodePerEvent) {
  for (const char* name : {"berthing.tm", "cof.tm"}) {
    auto m = tmtest::load_fixture(name);
    auto g = tmtest::accept_dot(to_dot(m, view(View::behavior_view)));
    ASSERT_TRUE(g.ok) << g.error;
    EXPECT_EQ(g.nodes.size(), m.events().size()) << name;
    EXPECT_EQ(g.edges.size(), m.behavior().size()) << name;
  }
  EXPECT_EQ(tmtest::accept_dot(to_dot(tmtest::load_fixture("cof.tm"), view(View::behavior_view)))
                .nodes.size(),
            34u);
}

TEST(Dot, AnnotationsCanBeHidden) {
  auto m = tmtest::load_fixture("berthing.tm");
  EXPECT_NE(to_dot(m).find("(35)"), std::string::npos);
  RenderOptions o;
  o.include_annotations = false;
  auto text = to_dot(m, o);
  EXPECT_EQ(text.find("(35)"), std::string::npos);
  EXPECT_EQ(text.find("(1)"), std::string::npos);
}

TEST(Dot, HighlightFillsRegionStages) {
  auto m = tmtest::load_fixture("berthing.tm");
  RenderOptions o;
  o.highlight_events = {"E1"};
  auto g = tmtest::accept_dot(to_dot(m, o));
  ASSERT_TRUE(g.ok) << g.error;
  std::set<std::string> filled;
  for (const auto& [node, attrs] : g.node_attrs)
    if (attrs.count("fillcolor")) filled.insert(node);
  const auto& region = m.find_event("E1")->region;
  EXPECT_EQ(filled, std::set<std::string>(region.begin(), region.end()));
}

TEST(Dot, QuotesInNamesAreEscaped) {
  ModelBuilder b("odd \"name\"");
  auto a = b.add_thimac(std::nullopt, "A", "a \\ \"b\"");
  b.add_stage(a, ActionKind::create);
  b.add_stage(a, ActionKind::release);
  b.add_flow({"A.create", "A.release", "say \"x\"", {}});
  auto g = tmtest::accept_dot(to_dot(b.build()));
  ASSERT_TRUE(g.ok) << g.error;
  EXPECT_EQ(g.name, "odd \"name\"");
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].attrs.at("label"), "say \"x\"");
}

TEST(Dot, GeneratedModelsAreAcceptedInEveryView) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto m = tmtest::ModelGenerator(seed).generate();
    for (auto v : {View::static_view, View::dynamic_view, View::behavior_view}) {
      auto g = tmtest::accept_dot(to_dot(m, view(v)));
      ASSERT_TRUE(g.ok) << "seed " << seed << " " << to_string(v) << ": " << g.error;
      if (v == View::static_view) {
        ASSERT_EQ(g.nodes.size(), m.stages().size() + m.thimacs().size()) << "seed " << seed;
      }
    }
  }
}

TEST(Dot, ViewNames) {
  for (auto v : {View::static_view, View::dynamic_view, View::behavior_view})
    EXPECT_EQ(parse_view(to_string(v)), v);
  EXPECT_FALSE(parse_view("sideways"));
}

TEST(Json, CorporaRoundTrip) {
  for (const char* name : {"berthing.tm", "cof.tm"}) {
    auto m = tmtest::load_fixture(name);
    auto text = to_json(m);
    auto back = model_from_json(text);
    EXPECT_EQ(back, m) << name;
    EXPECT_EQ(to_json(back), text) << name;
  }
}

TEST(Json, EventArrays) {
  auto b = Json::parse(to_json(tmtest::load_fixture("berthing.tm")));
  auto c = Json::parse(to_json(tmtest::load_fixture("cof.tm")));
  EXPECT_EQ(b.at("format"), "tmkit-model");
  EXPECT_EQ(b.at("version"), 1);
  EXPECT_EQ(b.at("events").size(), 21u);
  EXPECT_EQ(c.at("events").size(), 34u);
  EXPECT_EQ(b.at("events")[0].at("id"), "E1");
  EXPECT_EQ(b.at("events")[0].at("order"), 1);
}

TEST(Json, GeneratedModelsRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    auto m = tmtest::ModelGenerator(seed).generate();
    ASSERT_EQ(model_from_json(to_json(m)), m) << "seed " << seed;
  }
}

TEST(Json, ExportIsDeterministic) {
  auto m = tmtest::load_fixture("cof.tm");
  EXPECT_EQ(to_json(m), to_json(tmtest::load_fixture("cof.tm")));
}

TEST(Json, MalformedDocumentsAreImportErrors) {
  EXPECT_THROW(model_from_json("{"), ImportError);
  EXPECT_THROW(model_from_json("{\"format\": \"other\", \"version\": 1}"), ImportError);
  EXPECT_THROW(model_from_json("{\"format\": \"tmkit-model\", \"version\": 9}"), ImportError);
  EXPECT_THROW(model_from_json("{\"format\": \"tmkit-model\", \"version\": 1, \"name\": \"M\"}"),
               ImportError);
  EXPECT_THROW(sim_config_from_json("[1,2"), ImportError);
}

TEST(Json, ImportedContentMustBuild) {
  std::string doc = R"({"format": "tmkit-model", "version": 1, "name": "M",
    "thimacs": [{"id": "A", "stages": [{"kind": "create"}]}],
    "flows": [{"from": "A.create", "to": "A.missing"}],
    "triggers": [], "events": [], "behavior": []})";
  EXPECT_ANY_THROW(model_from_json(doc));
}

TEST(Json, SimConfigRoundTrip) {
  auto text = tmtest::read_text(tmtest::fixture_path("berthing.sim.json"));
  auto cfg = sim_config_from_json(text);
  EXPECT_EQ(cfg.max_ticks, 200u);
  ASSERT_EQ(cfg.sources.size(), 2u);
  EXPECT_EQ(sim_config_from_json(to_json_value(cfg).dump()), cfg);
  auto defaults = sim_config_from_json("{}");
  EXPECT_EQ(defaults.max_ticks, 1000u);
  EXPECT_TRUE(defaults.sources.empty());
}

TEST(Json, SimLogDocument) {
  auto m = tmtest::load_fixture("berthing.tm");
  auto log = simulate(m, sim_config_from_json(
                             tmtest::read_text(tmtest::fixture_path("berthing.sim.json"))));
  auto j = Json::parse(to_json(log));
  EXPECT_EQ(j.at("format"), "tmkit-simlog");
  EXPECT_EQ(j.at("fingerprint"), fingerprint(m));
  EXPECT_EQ(j.at("activations").size(), log.activations.size());
  EXPECT_EQ(j.at("meta_events").size(), log.meta_events.size());
  EXPECT_EQ(j.at("census").at("created"), log.census.created);
}

TEST(Json, ReportDocument) {
  auto m = from_source(R"(model M {
  thimac A { stage create stage process }
  flow A.process -> A.create
  event E1 { region [] }
})");
  auto r = validate_all(m);
  auto j = Json::parse(to_json(r));
  EXPECT_EQ(j.at("format"), "tmkit-report");
  EXPECT_EQ(j.at("valid"), false);
  EXPECT_EQ(j.at("errors"), 2);
  ASSERT_EQ(j.at("violations").size(), 2u);
  EXPECT_EQ(j.at("violations")[0].at("code"), "INTRA_ADJACENCY");
  EXPECT_EQ(j.at("violations")[1].at("code"), "REGION_EMPTY");
}
