#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "conles/alignment_io.hpp"
#include "conles/engine.hpp"
#include "conles/event_log.hpp"
#include "conles/generator.hpp"
#include "conles/pnml.hpp"
#include "support/fixture.hpp"

using namespace conles;
using conles::testing::fixture_net;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Same places, transitions (id, label), arcs as multisets, and markings.
void expect_isomorphic(const PetriNet& a, const PetriNet& b) {
  auto da = a.definition(), db = b.definition();
  auto sorted = [](auto v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  EXPECT_EQ(sorted(da.places), sorted(db.places));
  ASSERT_EQ(a.transition_count(), b.transition_count());
  for (std::uint32_t i = 0; i < a.transition_count(); ++i) {
    const auto t = b.find_transition(a.transition_name(TransitionId{i}));
    ASSERT_TRUE(t);
    EXPECT_EQ(a.label(TransitionId{i}), b.label(*t));
    auto names = [](const PetriNet& n, std::span<const Token> toks) {
      std::vector<std::pair<std::string, std::uint32_t>> out;
      for (auto tok : toks) out.emplace_back(n.place_name(tok.place), tok.count);
      std::sort(out.begin(), out.end());
      return out;
    };
    EXPECT_EQ(names(a, a.preset(TransitionId{i})), names(b, b.preset(*t)));
    EXPECT_EQ(names(a, a.postset(TransitionId{i})), names(b, b.postset(*t)));
  }
  EXPECT_EQ(a.format(a.initial_marking()), b.format(b.initial_marking()));
  EXPECT_EQ(a.format(a.final_marking()), b.format(b.final_marking()));
}

}  // namespace

TEST(Pnml, ShippedFixtureMatchesHandBuiltNet) {
  const PetriNet n = read_pnml(slurp(CONLES_DATA_DIR "/fixture_net.pnml"));
  EXPECT_TRUE(validate(n.definition()).empty());
  expect_isomorphic(n, fixture_net());
}

TEST(Pnml, RoundTrip) {
  for (const PetriNet& net : {fixture_net(), loop_parallel_model(3, 2), random_block_net(9)})
    expect_isomorphic(read_pnml(write_pnml(net)), net);
}

TEST(Pnml, InvisibleNamelessTransitionIsSilent) {
  const std::string xml = R"(<pnml><net id="n"><page id="g">
    <place id="a"><initialMarking><text>1</text></initialMarking></place><place id="b"/>
    <transition id="t1"><toolspecific tool="ProM" activity="$invisible$"/></transition>
    <transition id="t2"><name><text>Pay</text></name></transition>
    <arc id="x" source="a" target="t1"/><arc id="y" source="t1" target="b"/>
    <arc id="z" source="b" target="t2"><inscription><text>2</text></inscription></arc>
    <arc id="w" source="t2" target="a"/>
  </page></net></pnml>)";
  const PetriNet n = read_pnml(xml, std::string_view("b = 1\n# comment\n"));
  EXPECT_TRUE(n.label(*n.find_transition("t1")).is_silent());
  EXPECT_EQ(n.label(*n.find_transition("t2")).text(), "Pay");
  EXPECT_EQ(n.preset(*n.find_transition("t2"))[0].count, 2u);
  EXPECT_EQ(n.final_marking(), n.marking({"b"}));
}

TEST(Pnml, Errors) {
  EXPECT_THROW(read_pnml("<pnml><net id=\"n\"><page"), ParseError);
  EXPECT_THROW(read_pnml("<pnml><net id=\"n\"><place id=\"a\"/></net></pnml>"), ParseError);  // no final marking
  EXPECT_THROW(read_pnml("<pnml><net id=\"n\"><place id=\"a\"/></net></pnml>", std::string_view("q=1")),
               ValidationError);
  EXPECT_THROW(read_final_marking_sidecar("p4"), ParseError);
  EXPECT_THROW(read_final_marking_sidecar("p4=x"), ParseError);
  try {
    read_pnml("<pnml>\n<net id=\"n\">\n<page>\n</net></pnml>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(ReadLog, Lines) {
  const auto log = read_log("A B D C C E C C E\n", LogFormat::Lines);
  ASSERT_EQ(log.cases.size(), 1u);
  EXPECT_EQ(log.cases[0].trace.size(), 9u);
  EXPECT_EQ(log.cases[0].trace, Trace::from_letters("ABDCCECCE"));
  const auto two = read_log("# header\nA B\n\n  C  \r\n", LogFormat::Lines);
  ASSERT_EQ(two.cases.size(), 2u);
  EXPECT_EQ(two.cases[1].id, "2");
  EXPECT_EQ(two.cases[1].trace, Trace{"C"});
  EXPECT_EQ(read_log(write_lines(two), LogFormat::Lines).cases[0].trace, two.cases[0].trace);
}

TEST(ReadLog, CsvGroupsInterleavedCases) {
  const auto log = read_log("case_id,activity\nc1,A\nc2,X\nc1,B\n\"c2\",\"Y, Z\"\nc1,C\n", LogFormat::Csv);
  ASSERT_EQ(log.cases.size(), 2u);
  EXPECT_EQ(log.cases[0].id, "c1");
  EXPECT_EQ(log.cases[0].trace, (Trace{"A", "B", "C"}));
  EXPECT_EQ(log.cases[1].trace, (Trace{"X", "Y, Z"}));
  EXPECT_THROW(read_log("c1\n", LogFormat::Csv), ParseError);
  EXPECT_THROW(read_log("c1,\"A\n", LogFormat::Csv), ParseError);
}

TEST(ReadLog, Xes) {
  const std::string xes = R"(<?xml version="1.0"?>
<log xes.version="1.0">
  <trace>
    <string key="concept:name" value="case-7"/>
    <string key="origin" value="test"/>
    <event><string key="concept:name" value="A"/><date key="time:timestamp" value="2020-01-01"/></event>
    <event><string key="concept:name" value="B"/></event>
  </trace>
  <trace><event><string key="concept:name" value="C"/></event></trace>
</log>)";
  const auto log = read_log(xes, LogFormat::Xes);
  ASSERT_EQ(log.cases.size(), 2u);
  EXPECT_EQ(log.cases[0].id, "case-7");
  EXPECT_EQ(log.cases[0].trace, (Trace{"A", "B"}));
  ASSERT_EQ(log.cases[0].attributes.size(), 1u);
  EXPECT_EQ(log.cases[0].attributes[0].second, "test");
  EXPECT_EQ(log.cases[1].id, "2");
}

TEST(ReadLog, XesErrors) {
  EXPECT_THROW(read_log(R"(<log><trace><event><int key="concept:name" value="3"/></event></trace></log>)",
                        LogFormat::Xes),
               ParseError);
  EXPECT_THROW(read_log(R"(<log><trace><string key="concept:name" value="x"/></trace>
                           <trace><string key="concept:name" value="x"/></trace></log>)",
                        LogFormat::Xes),
               ParseError);
  EXPECT_THROW(read_log("<log><trace>", LogFormat::Xes), ParseError);
}

TEST(ReadLog, EmptyLogWarns) {
  const auto log = read_log("\n# nothing\n", LogFormat::Lines);
  EXPECT_TRUE(log.cases.empty());
  EXPECT_EQ(log.warnings.size(), 1u);
}

TEST(ReadLog, FormatNames) {
  EXPECT_EQ(log_format_for_path("x/y.xes"), LogFormat::Xes);
  EXPECT_EQ(log_format_for_path("y.csv"), LogFormat::Csv);
  EXPECT_EQ(log_format_for_path("y.txt"), LogFormat::Lines);
  EXPECT_THROW(parse_log_format("parquet"), ParseError);
}

TEST(WriteAlignment, RunningExampleTsv) {
  const PetriNet n = fixture_net();
  ConlesConfig c;
  c.window_length = 3;
  c.candidates = 2;
  const auto r = conles_align(n, Trace::from_letters("ABDCCECCE"), c);
  const std::string tsv = write_alignment("1", r, n, OutputFormat::Tsv);
  std::istringstream in(tsv);
  std::string head, log, model;
  std::getline(in, head);
  std::getline(in, log);
  std::getline(in, model);
  EXPECT_EQ(head, "case\t1\tunit_cost\t2\tsilent_count\t" + std::to_string(r.silent_count));
  EXPECT_EQ(log.rfind("log\t", 0), 0u);
  EXPECT_EQ(model.rfind("model\t", 0), 0u);
  EXPECT_NE(model.find("\tτ"), std::string::npos);
  EXPECT_NE(log.find("\t≫"), std::string::npos);
  EXPECT_NE(model.find("\t≫"), std::string::npos);  // the log moves on D and E
  EXPECT_NE(tsv.find("\xE2\x89\xAB"), std::string::npos);
}

TEST(WriteAlignment, JsonShapeAndReplay) {
  const auto g = build_model_reachability(fixture_net());
  const PetriNet& n = g->model();
  ConlesConfig c;
  c.window_length = 3;
  c.candidates = 2;
  const Trace t = Trace::from_letters("ABDCCECCE");
  const auto r = ConlesAligner(g, c).align(t);
  const auto j = nlohmann::json::parse(write_alignment("1", r, n, OutputFormat::Json));
  EXPECT_EQ(j["case"], "1");
  EXPECT_EQ(j["unit_cost"], 2);
  EXPECT_EQ(j["windows"].size(), 3u);
  EXPECT_TRUE(j.contains("wall_ms"));
  bool saw_null = false;
  for (const auto& m : j["moves"]) saw_null = saw_null || m["log"].is_null() || m["model"].is_null();
  EXPECT_TRUE(saw_null);

  const auto moves = read_alignment_moves(j, n, t);
  EXPECT_EQ(moves, r.alignment.moves);
  const Alignment back{moves, total_cost(moves), n.final_marking(), t.size()};
  EXPECT_EQ(back.cost, r.alignment.cost);
  EXPECT_EQ(check_alignment(n, t, n.initial_marking(), 0, back), std::nullopt);
  EXPECT_THROW(read_alignment_moves(j, n, Trace::from_letters("ABC")), ParseError);

  const auto quiet = nlohmann::json::parse(write_alignment("1", r, n, OutputFormat::Json, {false}));
  EXPECT_FALSE(quiet.contains("wall_ms"));
  EXPECT_FALSE(quiet["windows"][0].contains("wall_ms"));
}

TEST(WriteAlignment, EmptyAlignment) {
  NetDefinition def;
  def.places = {"p"};
  def.initial_marking = def.final_marking = {{"p", 1}};
  const PetriNet n(def);
  const auto r = conles_align(n, Trace{}, {});
  EXPECT_EQ(r.unit_cost, 0u);
  const auto j = nlohmann::json::parse(write_alignment("e", r, n, OutputFormat::Json));
  EXPECT_TRUE(j["moves"].empty());
  EXPECT_EQ(j["unit_cost"], 0);
}

TEST(WriteAlignment, Failure) {
  const auto j = nlohmann::json::parse(write_failure("9", "timeout", "search deadline reached", OutputFormat::Json));
  EXPECT_EQ(j["outcome"], "timeout");
  EXPECT_EQ(write_failure("9", "statecap", "x", OutputFormat::Tsv), "case\t9\toutcome\tstatecap\terror\tx\n");
}
