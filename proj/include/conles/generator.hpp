#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "conles/errors.hpp"
#include "conles/petri_net.hpp"
#include "conles/reach_analysis.hpp"

namespace conles {

struct NoiseSpec {
  double insert_prob = 0;
  double delete_prob = 0;
  double substitute_prob = 0;

  void check() const {
    for (double p : {insert_prob, delete_prob, substitute_prob})
      if (!(p >= 0 && p <= 1)) throw ValidationError({"noise probabilities must lie in [0,1]"});
    if (insert_prob + delete_prob + substitute_prob > 1 + 1e-12)
      throw ValidationError({"noise probabilities must sum to at most 1"});
  }
};

namespace detail {

// std::uniform_*_distribution differ between standard libraries; these keep
// generated data identical everywhere for a given seed.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

// Steps from each node of the initial closure to the nearest final node.
class FinalDistance {
 public:
  using Node = ReachabilityGraph::Node;
  static constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();

  explicit FinalDistance(const ReachabilityGraph& graph) {
    std::vector<const Node*> order{&graph.root()};
    std::unordered_map<const Node*, std::size_t> index{{&graph.root(), 0}};
    for (std::size_t i = 0; i < order.size(); ++i)
      for (const auto& e : order[i]->successors)
        if (index.emplace(e.target, order.size()).second) order.push_back(e.target);
    std::vector<std::vector<std::size_t>> preds(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      for (const auto& e : order[i]->successors) preds[index[e.target]].push_back(i);
    std::vector<std::size_t> dist(order.size(), kInf), queue;
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i]->is_final) {
        dist[i] = 0;
        queue.push_back(i);
      }
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (std::size_t p : preds[queue[h]])
        if (dist[p] == kInf) {
          dist[p] = dist[queue[h]] + 1;
          queue.push_back(p);
        }
    for (std::size_t i = 0; i < order.size(); ++i) dist_[order[i]] = dist[i];
  }

  std::size_t operator()(const Node* n) const { return dist_.at(n); }

 private:
  std::unordered_map<const Node*, std::size_t> dist_;
};

}  // namespace detail

/// Random execution of the model from its initial to its final marking,
/// projected on activity labels, then perturbed by `noise`.
///
/// The walk picks uniformly among enabled transitions that keep the final
/// marking reachable. While fewer than `min_len` activities have been
/// emitted it avoids entering the final marking if it can; from `max_len`
/// on it follows a shortest path to the final marking, so the unperturbed
/// trace is always a complete model execution. Noise is applied per event
/// with one draw: delete, substitute with another model activity, insert a
/// random model activity before the event, or keep.
inline Trace generate_trace(const ReachabilityGraph& graph, const NoiseSpec& noise, std::size_t max_len,
                            std::uint64_t seed, std::size_t min_len = 0) {
  using Node = ReachabilityGraph::Node;
  noise.check();
  const PetriNet& model = graph.model();
  const detail::FinalDistance dist(graph);
  if (dist(&graph.root()) == detail::FinalDistance::kInf)
    throw Infeasible("model final marking is unreachable from its initial marking");

  std::mt19937_64 rng(seed);
  std::vector<std::string> events;
  const Node* at = &graph.root();
  const std::size_t step_budget = 64 * (max_len + min_len + graph.size()) + 1024;
  std::size_t steps = 0;
  while (!(at->is_final && (events.size() >= min_len || at->successors.empty()))) {
    if (++steps > step_budget)
      throw GenerationStuck("no final marking after " + std::to_string(step_budget) + " steps");
    std::vector<const ReachabilityGraph::Edge*> choices;
    if (events.size() >= max_len) {
      for (const auto& e : at->successors)
        if (dist(e.target) + 1 == dist(at)) {
          choices.push_back(&e);
          break;
        }
    } else {
      for (const auto& e : at->successors)
        if (dist(e.target) != detail::FinalDistance::kInf) choices.push_back(&e);
      if (events.size() < min_len) {
        std::vector<const ReachabilityGraph::Edge*> open;
        for (const auto* e : choices)
          if (!e->target->is_final) open.push_back(e);
        if (!open.empty()) choices = std::move(open);
      }
    }
    if (choices.empty()) throw GenerationStuck("walk reached " + model.format(at->marking) + " with no way forward");
    const auto* e = choices[detail::uniform_index(rng, choices.size())];
    const Label& l = model.label(e->transition);
    if (!l.is_silent()) events.emplace_back(l.text());
    at = e->target;
  }

  const auto& labels = graph.labels();
  std::vector<std::string> noisy;
  for (const auto& ev : events) {
    const double r = detail::uniform01(rng);
    if (r < noise.delete_prob) continue;
    if (r < noise.delete_prob + noise.substitute_prob) {
      if (labels.size() > 1) {
        std::string sub;
        do sub = labels.name(static_cast<LabelId>(detail::uniform_index(rng, labels.size())));
        while (sub == ev);
        noisy.push_back(sub);
      } else {
        noisy.push_back(ev);
      }
      continue;
    }
    if (r < noise.delete_prob + noise.substitute_prob + noise.insert_prob && labels.size() > 0)
      noisy.push_back(labels.name(static_cast<LabelId>(detail::uniform_index(rng, labels.size()))));
    noisy.push_back(ev);
  }
  return Trace(std::move(noisy));
}

/// Workload model with concurrency and a loop: a silent split into
/// `branches` parallel sequences of `branch_length` activities, a silent
/// join, then either a silent redo back to the start or the activity "Z"
/// into the final place. Branch i emits activities like "A1", "A2", ...
/// (letters from 'A').
inline PetriNet loop_parallel_model(std::size_t branches = 4, std::size_t branch_length = 3) {
  if (branches < 1 || branches > 25 || branch_length < 1)
    throw ValidationError({"loop_parallel_model needs 1..25 branches of length >= 1"});
  NetDefinition def;
  def.places = {"start", "joined", "end"};
  def.transitions.push_back({"split", Label::silent()});
  def.transitions.push_back({"join", Label::silent()});
  def.transitions.push_back({"redo", Label::silent()});
  def.transitions.push_back({"finish", Label::activity("Z")});
  def.arcs = {{"start", "split"}, {"join", "joined"}, {"joined", "redo"},
              {"redo", "start"},  {"joined", "finish"}, {"finish", "end"}};
  for (std::size_t b = 0; b < branches; ++b) {
    const std::string letter(1, static_cast<char>('A' + b));
    for (std::size_t k = 0; k <= branch_length; ++k) def.places.push_back("b" + letter + std::to_string(k));
    def.arcs.push_back({"split", "b" + letter + "0"});
    for (std::size_t k = 1; k <= branch_length; ++k) {
      const std::string t = "t" + letter + std::to_string(k);
      def.transitions.push_back({t, Label::activity(letter + std::to_string(k))});
      def.arcs.push_back({"b" + letter + std::to_string(k - 1), t});
      def.arcs.push_back({t, "b" + letter + std::to_string(k)});
    }
    def.arcs.push_back({"b" + letter + std::to_string(branch_length), "join"});
  }
  def.initial_marking = {{"start", 1}};
  def.final_marking = {{"end", 1}};
  return PetriNet(std::move(def));
}

struct RandomNetLimits {
  std::size_t max_places = 12;
  std::size_t max_transitions = 10;
  std::size_t max_silent = 2;
  std::size_t alphabet = 6;  // activities drawn from "A", "B", ...
};

namespace detail {

// Block-structured construction: sequence, exclusive choice, parallel
// (silent split/join) and loop (redo transition from block exit to entry),
// nested between a source and a sink place. Nets built this way are safe;
// random_block_net still checks every candidate on its reachability graph.
class BlockNetBuilder {
 public:
  BlockNetBuilder(std::mt19937_64& rng, const RandomNetLimits& limits) : rng_(rng), limits_(limits) {}

  std::optional<NetDefinition> build() {
    def_ = {};
    silent_ = 0;
    const auto source = place(), sink = place();
    block(source, sink, 0);
    if (def_.places.size() > limits_.max_places || def_.transitions.size() > limits_.max_transitions ||
        silent_ > limits_.max_silent)
      return std::nullopt;
    def_.initial_marking = {{source, 1}};
    def_.final_marking = {{sink, 1}};
    return def_;
  }

 private:
  std::string place() {
    def_.places.push_back("p" + std::to_string(def_.places.size()));
    return def_.places.back();
  }

  std::string transition(std::vector<std::string> in, std::vector<std::string> out, Label label) {
    const std::string t = "t" + std::to_string(def_.transitions.size());
    if (label.is_silent()) ++silent_;
    def_.transitions.push_back({t, std::move(label)});
    for (auto& p : in) def_.arcs.push_back({p, t});
    for (auto& p : out) def_.arcs.push_back({t, p});
    return t;
  }

  Label activity() {
    return Label::activity(std::string(1, static_cast<char>('A' + uniform_index(rng_, limits_.alphabet))));
  }

  void block(const std::string& in, const std::string& out, int depth) {
    const std::size_t kind = depth >= 3 ? 0 : uniform_index(rng_, depth == 0 ? 4 : 6);
    switch (kind) {
      case 1: {  // sequence
        const auto mid = place();
        block(in, mid, depth + 1);
        block(mid, out, depth + 1);
        break;
      }
      case 2:  // choice
        block(in, out, depth + 1);
        block(in, out, depth + 1);
        break;
      case 3: {  // parallel
        const auto a = place(), b = place(), c = place(), d = place();
        transition({in}, {a, b}, Label::silent());
        block(a, c, depth + 1);
        block(b, d, depth + 1);
        transition({c, d}, {out}, Label::silent());
        break;
      }
      case 4: {  // loop; the redo goes through fresh places so the block stays free-choice
        const auto entry = place(), exit = place();
        transition({in}, {entry}, activity());
        block(entry, exit, depth + 1);
        transition({exit}, {entry}, uniform_index(rng_, 3) == 0 ? Label::silent() : activity());
        transition({exit}, {out}, activity());
        break;
      }
      default:
        transition({in}, {out}, activity());
    }
  }

  std::mt19937_64& rng_;
  RandomNetLimits limits_;
  NetDefinition def_;
  std::size_t silent_ = 0;
};

}  // namespace detail

/// Random safe net within `limits` whose final marking is reachable from
/// every reachable marking. Deterministic for a given seed.
inline PetriNet random_block_net(std::uint64_t seed, const RandomNetLimits& limits = {}) {
  std::mt19937_64 rng(seed);
  detail::BlockNetBuilder builder(rng, limits);
  for (int attempt = 0; attempt < 10'000; ++attempt) {
    auto def = builder.build();
    if (!def) continue;
    PetriNet net(std::move(*def));
    ReachabilityGraph graph(net, 100'000);
    bool ok = true;
    for (std::uint32_t i = 0; ok && i < graph.size(); ++i) {
      const auto& n = graph.node(i);
      for (const auto& tok : n.marking.tokens()) ok = ok && tok.count <= 1;
      ok = ok && !graph.info(n).dead;
    }
    if (ok) return net;
  }
  throw GenerationStuck("no admissible random net after 10000 attempts");
}

}  // namespace conles
