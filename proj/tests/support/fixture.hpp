#pragma once

#include "conles/petri_net.hpp"

namespace conles::testing {

/// Running-example process model: a loop A,B,C with a back edge D, a silent
/// redo of C and the exit E.
inline PetriNet fixture_net() {
  NetDefinition def;
  def.places = {"p0", "p1", "p2", "p3", "p4"};
  auto t = [&](const char* id, Label l, const char* in, const char* out) {
    def.transitions.push_back({id, std::move(l)});
    def.arcs.push_back({in, id});
    def.arcs.push_back({id, out});
  };
  t("A", Label::activity("A"), "p0", "p1");
  t("B", Label::activity("B"), "p1", "p2");
  t("C", Label::activity("C"), "p2", "p3");
  t("D", Label::activity("D"), "p3", "p0");
  t("tau", Label::silent(), "p3", "p2");
  t("E", Label::activity("E"), "p3", "p4");
  def.initial_marking = {{"p0", 1}};
  def.final_marking = {{"p4", 1}};
  return PetriNet(std::move(def));
}

}  // namespace conles::testing
