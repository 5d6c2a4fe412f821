#include <gtest/gtest.h>

#include <array>
#include <set>
#include <thread>

#include "conles/engine.hpp"
#include "conles/generator.hpp"
#include "support/fixture.hpp"

using namespace conles;
using conles::testing::fixture_net;

namespace {

ConlesConfig config(std::size_t L, std::size_t nc) {
  ConlesConfig c;
  c.window_length = L;
  c.candidates = nc;
  return c;
}

std::set<std::string> markings(const PetriNet& n, const std::vector<CandidateAlignment>& v) {
  std::set<std::string> out;
  for (const auto& c : v) out.insert(n.format(c.model_marking));
  return out;
}

// Sequential net from (id, label, input, output) rows; empty label = silent.
PetriNet net_of(std::vector<std::array<const char*, 4>> rows, std::vector<std::string> places) {
  NetDefinition def;
  def.places = std::move(places);
  for (const auto& [id, label, in, out] : rows) {
    def.transitions.push_back({id, *label ? Label::activity(label) : Label::silent()});
    def.arcs.push_back({in, id});
    def.arcs.push_back({id, out});
  }
  def.initial_marking = {{"p0", 1}};
  def.final_marking = {{"p1", 1}};
  return PetriNet(std::move(def));
}

}  // namespace

TEST(SplitTrace, Examples) {
  EXPECT_EQ(split_trace(9, 3), (std::vector<Window>{{0, 3}, {3, 6}, {6, 9}}));
  EXPECT_EQ(split_trace(9, 4), (std::vector<Window>{{0, 4}, {4, 8}, {8, 9}}));
  EXPECT_EQ(split_trace(9, 9), (std::vector<Window>{{0, 9}}));
  EXPECT_TRUE(split_trace(0, 5).empty());
  EXPECT_THROW(split_trace(4, 0), std::invalid_argument);
}

TEST(Conles, RunningExample) {
  const PetriNet n = fixture_net();
  const Trace t = Trace::from_letters("ABDCCECCE");
  const auto r = conles_align(n, t, config(3, 2));
  EXPECT_EQ(r.unit_cost, 2u);
  EXPECT_EQ(r.windows.size(), 3u);
  EXPECT_EQ(check_alignment(n, t, n.initial_marking(), 0, r.alignment), std::nullopt);
  EXPECT_EQ(r.alignment.model_marking, n.final_marking());
  EXPECT_EQ(r.alignment.trace_position, t.size());
}

TEST(Conles, IntermediateCandidatesOfTheRunningExample) {
  const auto g = build_model_reachability(fixture_net());
  const PetriNet& n = g->model();
  const ConlesAligner aligner(g, config(3, 2));
  const Trace t = Trace::from_letters("ABDCCECCE");

  const auto w1 = aligner.intermediate_candidates(t, 1);
  EXPECT_EQ(markings(n, w1), (std::set<std::string>{"[p0]", "[p2]"}));
  for (const auto& c : w1) EXPECT_EQ(c.cost.unit, 1u);

  const auto w2 = aligner.intermediate_candidates(t, 2);
  EXPECT_EQ(markings(n, w2), (std::set<std::string>{"[p2]", "[p3]"}));
  for (const auto& c : w2) EXPECT_EQ(c.cost.unit, 2u);

  EXPECT_EQ(aligner.intermediate_candidates(t, 0).size(), 1u);
  EXPECT_THROW(aligner.intermediate_candidates(t, 3), IndexError);
}

TEST(Conles, CandidateListInvariants) {
  const auto g = build_model_reachability(loop_parallel_model(3, 2));
  const Trace t = generate_trace(*g, NoiseSpec{0.15, 0.15, 0.15}, 60, 11, 60);
  for (std::size_t nc : {1u, 2u, 4u}) {
    const ConlesAligner aligner(g, config(7, nc));
    for (std::size_t w = 1; w < split_trace(t, 7).size(); ++w) {
      const auto cands = aligner.intermediate_candidates(t, w);
      ASSERT_LE(cands.size(), nc);
      std::set<Marking> seen;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        EXPECT_TRUE(seen.insert(cands[i].model_marking).second);
        EXPECT_FALSE(g->info(cands[i].model_marking).dead);
        EXPECT_EQ(total_cost(cands[i].moves), cands[i].cost);
        if (i) {
          EXPECT_LE(cands[i - 1].key, cands[i].key);
        }
        Alignment partial{cands[i].moves, cands[i].cost, cands[i].model_marking, w * 7};
        EXPECT_EQ(check_alignment(g->model(), t, g->model().initial_marking(), 0, partial), std::nullopt);
      }
    }
  }
}

TEST(Conles, ConformingTraceStaysAtZero) {
  const PetriNet n = fixture_net();
  EXPECT_EQ(conles_align(n, Trace::from_letters("ABCE"), config(2, 1)).unit_cost, 0u);
  EXPECT_EQ(conles_align(n, Trace::from_letters("ABCDABCE"), config(1, 1)).unit_cost, 0u);
}

// With one candidate and one-event windows, end markings that tie on cost
// and bound are told apart by whether the next event can be matched at once.
TEST(Conles, TiesGoToTheMarkingThatTakesTheNextEvent) {
  const PetriNet n = net_of({{"a0", "A", "p0", "p3"},
                             {"a1", "A", "p3", "p4"},
                             {"c", "C", "p3", "p4"},
                             {"redo", "A", "p4", "p3"},
                             {"exit", "A", "p4", "p9"},
                             {"b", "B", "p9", "p1"}},
                            {"p0", "p1", "p3", "p4", "p9"});  // p9 last, so marking order alone picks p3
  EXPECT_EQ(conles_align(n, Trace::from_letters("AAAB"), config(1, 1)).unit_cost, 0u);
  EXPECT_EQ(conles_align(n, Trace::from_letters("AAAAAB"), config(1, 1)).unit_cost, 0u);
}

// A silent move is worth less than any unit of evidence about the rest of the trace.
TEST(Conles, SilentCostDoesNotOverrideTheBound) {
  const PetriNet n = net_of({{"a0", "A", "p0", "p3"},
                             {"a1", "A", "p3", "p5"},
                             {"b1", "B", "p5", "p6"},
                             {"tau", "", "p6", "p5"},
                             {"b2", "B", "p6", "p4"},
                             {"e", "E", "p4", "p3"},
                             {"c", "C", "p4", "p2"},
                             {"a2", "A", "p2", "p1"}},
                            {"p0", "p1", "p2", "p3", "p4", "p5", "p6"});
  const Trace t = Trace::from_letters("AABBBBBCA");
  EXPECT_EQ(optimal_alignment(ReachabilityGraph(n), t).cost.unit, 0u);
  EXPECT_EQ(conles_align(n, t, config(1, 1)).unit_cost, 0u);
}

TEST(Conles, SingleWindowMatchesOracle) {
  const auto g = build_model_reachability(fixture_net());
  const Trace t = Trace::from_letters("ABDCCECCE");
  const auto r = ConlesAligner(g, config(9, 1)).align(t);
  EXPECT_EQ(r.alignment.cost, optimal_alignment(*g, t).cost);
  EXPECT_EQ(r.unit_cost, 2u);
}

TEST(Conles, EmptyTrace) {
  const auto r = conles_align(fixture_net(), Trace{}, config(3, 2));
  EXPECT_EQ(r.unit_cost, 4u);
  EXPECT_EQ(r.windows.size(), 1u);
}

TEST(Conles, OracleFallback) {
  ConlesConfig c = config(20, 1);
  c.oracle_fallback = true;
  const auto r = conles_align(fixture_net(), Trace::from_letters("ABDCCECCE"), c);
  EXPECT_EQ(r.unit_cost, 2u);
}

TEST(Conles, RetentionByCostOnlyIsAnOption) {
  ConlesConfig c = config(3, 2);
  c.retention_ranking = RetentionRanking::CostOnly;
  const auto g = build_model_reachability(fixture_net());
  const auto r = ConlesAligner(g, c).align(Trace::from_letters("ABDCCECCE"));
  EXPECT_GE(r.unit_cost, 2u);
  EXPECT_EQ(check_alignment(g->model(), Trace::from_letters("ABDCCECCE"), g->model().initial_marking(), 0,
                            r.alignment),
            std::nullopt);
}

TEST(Conles, Timeout) {
  ConlesConfig c = config(3, 2);
  c.timeout = std::chrono::milliseconds(0);
  EXPECT_THROW(conles_align(fixture_net(), Trace::from_letters("ABDCCECCE"), c), Timeout);
}

TEST(Conles, BadConfig) {
  const auto g = build_model_reachability(fixture_net());
  EXPECT_THROW(ConlesAligner(g, config(0, 1)), std::invalid_argument);
  EXPECT_THROW(ConlesAligner(g, config(1, 0)), std::invalid_argument);
}

TEST(Conles, ConcurrentCallsAreDeterministic) {
  const auto g = build_model_reachability(loop_parallel_model(3, 2));
  const ConlesAligner aligner(g, config(10, 3));
  std::vector<Trace> traces;
  for (std::uint64_t s = 0; s < 6; ++s) traces.push_back(generate_trace(*g, NoiseSpec{0.1, 0.1, 0.1}, 80, s, 80));
  std::vector<std::vector<Move>> serial, parallel(traces.size());
  for (const auto& t : traces) serial.push_back(aligner.align(t).alignment.moves);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < traces.size(); ++i)
      threads.emplace_back([&, i] { parallel[i] = aligner.align(traces[i]).alignment.moves; });
  }
  EXPECT_EQ(serial, parallel);
}
