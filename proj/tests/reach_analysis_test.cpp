#include <gtest/gtest.h>

#include <map>
#include <set>
#include <thread>

#include "conles/generator.hpp"
#include "conles/reach_analysis.hpp"
#include "support/fixture.hpp"
#include "support/oracles.hpp"

using namespace conles;
using conles::testing::fixture_net;

namespace {

using Names = std::vector<std::string>;

SuffixProfile profile(const ReachabilityGraph& g, std::map<std::string, std::uint32_t> counts) {
  return SuffixProfile(g.labels(), counts);
}

}  // namespace

TEST(Reachability, FixtureHasFiveMarkings) {
  const ReachabilityGraph g(fixture_net());
  EXPECT_EQ(g.size(), 5u);
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < g.size(); ++i) seen.insert(g.model().format(g.node(i).marking));
  EXPECT_EQ(seen, (std::set<std::string>{"[p0]", "[p1]", "[p2]", "[p3]", "[p4]"}));
  EXPECT_TRUE(g.node(g.model().marking({"p4"})).is_final);
}

TEST(Reachability, EdgesFollowFiring) {
  const ReachabilityGraph g(loop_parallel_model(2, 2));
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const auto& n = g.node(i);
    EXPECT_EQ(n.successors.size(), enabled_transitions(g.model(), n.marking).size());
    for (const auto& e : n.successors) EXPECT_EQ(e.target->marking, fire(g.model(), n.marking, e.transition));
  }
}

TEST(Reachability, SinglePlace) {
  NetDefinition def;
  def.places = {"only"};
  def.initial_marking = {{"only", 1}};
  def.final_marking = {{"only", 1}};
  const ReachabilityGraph g{PetriNet(def)};
  EXPECT_EQ(g.size(), 1u);
}

TEST(Reachability, UnboundedNetHitsCap) {
  NetDefinition def;
  def.places = {"p", "q"};
  def.transitions = {{"grow", Label::activity("G")}};
  def.arcs = {{"p", "grow"}, {"grow", "p"}, {"grow", "q"}};
  def.initial_marking = {{"p", 1}};
  def.final_marking = {{"p", 1}};
  try {
    ReachabilityGraph g(PetriNet(def), 100);
    FAIL() << "expected StateCapExceeded";
  } catch (const StateCapExceeded& e) {
    EXPECT_EQ(e.cap(), 100u);
  }
}

TEST(ReachableLabels, FixtureExamples) {
  const ReachabilityGraph g(fixture_net());
  const PetriNet& n = g.model();
  EXPECT_EQ(g.names(g.reachable_labels(n.marking({"p0"}))), (Names{"A", "B", "C", "D", "E"}));
  EXPECT_EQ(g.names(g.reachable_labels(n.marking({"p2"}))), (Names{"A", "B", "C", "D", "E"}));
  EXPECT_TRUE(g.reachable_labels(n.marking({"p4"})).empty());
}

TEST(MandatoryLabels, FixtureExamples) {
  const ReachabilityGraph g(fixture_net());
  const PetriNet& n = g.model();
  EXPECT_EQ(g.names(g.mandatory_labels(n.marking({"p2"}))), (Names{"C", "E"}));
  EXPECT_EQ(g.names(g.mandatory_labels(n.marking({"p0"}))), (Names{"A", "B", "C", "E"}));
  EXPECT_TRUE(g.mandatory_labels(n.marking({"p4"})).empty());
}

TEST(MandatoryLabels, DeadMarking) {
  NetDefinition def = fixture_net().definition();
  def.places.push_back("trap");
  def.transitions.push_back({"F", Label::activity("F")});
  def.arcs.push_back({"p1", "F"});
  def.arcs.push_back({"F", "trap"});
  const ReachabilityGraph g{PetriNet(def)};
  const Marking trap = g.model().marking({"trap"});
  EXPECT_TRUE(g.info(trap).dead);
  EXPECT_THROW(g.mandatory_labels(trap), DeadMarking);
  EXPECT_THROW(marginal_lower_bound(g, trap, SuffixProfile(g.labels())), DeadMarking);
  EXPECT_FALSE(g.info(g.model().marking({"p1"})).dead);
}

TEST(ReadyLabels, FollowSilentMovesOnly) {
  const ReachabilityGraph g(fixture_net());
  const PetriNet& n = g.model();
  EXPECT_EQ(g.names(g.info(n.marking({"p0"})).ready), (Names{"A"}));
  EXPECT_EQ(g.names(g.info(n.marking({"p3"})).ready), (Names{"C", "D", "E"}));  // C behind the silent redo
  EXPECT_TRUE(g.info(n.marking({"p4"})).ready.empty());
}

TEST(NextEventBlocked, LooksAtTheFirstRemainingEvent) {
  const ReachabilityGraph g(fixture_net());
  const PetriNet& n = g.model();
  const Trace t{"C", "E", "Q"};
  const auto& p3 = g.info(n.marking({"p3"}));
  EXPECT_EQ(next_event_blocked(p3, SuffixProfile(g.labels(), t, 0, 3)), 0u);
  EXPECT_EQ(next_event_blocked(p3, SuffixProfile(g.labels(), t, 2, 3)), 1u);  // foreign
  EXPECT_EQ(next_event_blocked(g.info(n.marking({"p0"})), SuffixProfile(g.labels(), t, 0, 3)), 1u);
  EXPECT_EQ(next_event_blocked(p3, SuffixProfile(g.labels(), t, 3, 3)), 0u);  // nothing left
  EXPECT_EQ(next_event_blocked(p3, profile(g, {{"A", 1}})), 0u);              // counts carry no order
}

TEST(MarginalBound, FixtureSpotValues) {
  const ReachabilityGraph g(fixture_net());
  const PetriNet& n = g.model();
  EXPECT_EQ(marginal_lower_bound(g, n.marking({"p4"}), profile(g, {{"C", 2}, {"E", 1}})), Cost::units(3));
  EXPECT_EQ(marginal_lower_bound(g, n.marking({"p2"}), profile(g, {{"E", 2}, {"C", 2}})), Cost::units(0));
  EXPECT_EQ(marginal_lower_bound(g, n.marking({"p0"}), profile(g, {{"C", 4}, {"E", 2}})), Cost::units(2));
}

TEST(MarginalBound, ForeignActivitiesAreUnreachable) {
  const ReachabilityGraph g(fixture_net());
  const Trace t{"A", "Q", "Q", "B"};
  const SuffixProfile s(g.labels(), t, 0, t.size());
  EXPECT_EQ(s.foreign(), 2u);
  EXPECT_EQ(s.total(), 4u);
  // [p0]: Q twice unreachable, C and E mandatory but absent.
  EXPECT_EQ(marginal_lower_bound(g, g.model().marking({"p0"}), s), Cost::units(4));
}

TEST(SuffixProfile, CountsMatchTraceSuffix) {
  const ReachabilityGraph g(fixture_net());
  const Trace t = Trace::from_letters("ABDCCECCE");
  const SuffixProfile s(g.labels(), t, 3, 9);
  EXPECT_EQ(s.count(g.labels().id("C")), 4u);
  EXPECT_EQ(s.count(g.labels().id("E")), 2u);
  EXPECT_EQ(s.count(g.labels().id("A")), 0u);
  EXPECT_EQ(s.total(), 6u);
}

TEST(MarginalBound, RemovingAnEventLowersTheBoundByAtMostOne) {
  const ReachabilityGraph g(fixture_net());
  const Trace t = Trace::from_letters("CCEAEDBQ");
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const Marking& m = g.node(i).marking;
    for (std::size_t from = 0; from < t.size(); ++from) {
      const auto a = marginal_lower_bound(g, m, SuffixProfile(g.labels(), t, from, t.size())).unit;
      const auto b = marginal_lower_bound(g, m, SuffixProfile(g.labels(), t, from + 1, t.size())).unit;
      EXPECT_LE(a, b + 1);
      EXPECT_LE(b, a + 1);
    }
  }
}

TEST(ReachAnalysis, MatchesReferenceOnRandomNets) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const PetriNet net = random_block_net(seed);
    const ReachabilityGraph g(net);
    for (std::uint32_t i = 0; i < g.size(); ++i) {
      const Marking& m = g.node(i).marking;
      const auto reach = g.names(g.reachable_labels(m));
      const auto ref = conles::testing::reference_reachable_labels(net, m);
      EXPECT_EQ(std::set<std::string>(reach.begin(), reach.end()), ref) << "seed " << seed;
      const auto mand = conles::testing::reference_mandatory_labels(net, m);
      ASSERT_TRUE(mand) << "random nets have no dead markings";
      const auto got = g.names(g.mandatory_labels(m));
      EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), *mand) << "seed " << seed << " " << net.format(m);
      const LabelSet mandatory = g.mandatory_labels(m);
      EXPECT_TRUE(mandatory.is_subset_of(g.reachable_labels(m)));
      for (auto t : enabled_transitions(net, m)) {
        if (!net.label(t).is_silent()) {
          EXPECT_TRUE(g.reachable_labels(m).contains(g.labels().of(t)));
        }
      }
    }
  }
}

TEST(ReachAnalysis, MarkingsOutsideTheInitialClosureAreAddedOnDemand) {
  const ReachabilityGraph g(fixture_net());
  const Marking two = g.model().marking({"p2", "p2"});
  const auto before = g.size();
  const auto& n = g.node(two);
  EXPECT_GT(g.size(), before);
  EXPECT_EQ(n.marking, two);
  EXPECT_TRUE(g.info(n).dead);  // two tokens can never collapse to [p4]
}

TEST(ReachAnalysis, ConcurrentQueriesAgree) {
  const auto g = build_model_reachability(loop_parallel_model(3, 2));
  std::vector<std::vector<std::size_t>> seen(4);
  {
    std::vector<std::jthread> threads;
    for (std::size_t k = 0; k < seen.size(); ++k)
      threads.emplace_back([&, k] {
        for (std::uint32_t i = 0; i < g->size(); ++i) {
          const auto& info = g->info(g->node(i));
          seen[k].push_back(info.reachable.size() * 100 + info.mandatory.size());
        }
      });
  }
  for (std::size_t k = 1; k < seen.size(); ++k) EXPECT_EQ(seen[k], seen[0]);
}
