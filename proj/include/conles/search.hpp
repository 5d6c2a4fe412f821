#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "conles/cost.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"
#include "conles/reach_analysis.hpp"
#include "conles/sync_product.hpp"

namespace conles {

using Clock = std::chrono::steady_clock;

/// Execution sequence of a synchronous product. The product marking reached
/// is `model_marking` plus the trace token on p'_{trace_position}.
struct Alignment {
  std::vector<Move> moves;
  Cost cost;
  Marking model_marking;
  std::size_t trace_position = 0;
};

enum class GoalMode {
  AnyModelMarking,    // trace window consumed, model anywhere
  ModelFinalMarking,  // trace window consumed, model at its final marking
};

/// How goals of an open-ended window search are ranked.
enum class ExtensionRanking {
  UnreachableEvents,  // cost + remaining events unreachable from the end marking
  MarginalBound,      // cost + full marginal lower bound at the end marking
};

struct SearchLimits {
  std::size_t state_cap = kDefaultStateCap;
  Clock::time_point deadline = Clock::time_point::max();

  static SearchLimits within(std::chrono::milliseconds timeout, std::size_t state_cap = kDefaultStateCap) {
    return {state_cap, Clock::now() + timeout};
  }
};

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t stored = 0;
};

struct PartialAlignment {
  Alignment alignment;
  Cost key;    // ranking key the search ordered goals by
  Cost bound;  // marginal lower bound at the end marking for the trace suffix
  Cost tie_bound;  // max(bound, next-event block); breaks ties, never ranks
};

struct PartialSearchOptions {
  std::size_t candidates = 1;
  GoalMode goal = GoalMode::AnyModelMarking;
  ExtensionRanking ranking = ExtensionRanking::UnreachableEvents;
  SearchLimits limits;
};

namespace detail {

enum class Heuristic { UnreachableEvents, MarginalBound };

/// A* over the lazily expanded reachability graph of a synchronous product,
/// with reopening. Product states are (model node, local trace position).
/// Goals are reported in nondecreasing f = g + h, at most one per model
/// marking; with an admissible h the first goal per marking is optimal for it.
class ProductSearch {
 public:
  using Node = ReachabilityGraph::Node;

  ProductSearch(const ReachabilityGraph& graph, const SyncProduct& product, const SuffixProfile& suffix,
                Heuristic heuristic, GoalMode goal, const SearchLimits& limits)
      : graph_(graph), product_(product), heuristic_(heuristic), goal_(goal), limits_(limits),
        labels_(graph.labels().size()), length_(product.trace_length()) {
    // remaining_[pos] = activity counts of window events [pos, length) plus the suffix.
    remaining_.assign((length_ + 1) * labels_, 0);
    foreign_.assign(length_ + 1, 0);
    for (std::size_t l = 0; l < labels_; ++l) remaining_[length_ * labels_ + l] = suffix.count(LabelId(l));
    foreign_[length_] = suffix.foreign();
    if (suffix.next()) next_blocked_ = &suffix;
    for (std::size_t pos = length_; pos-- > 0;) {
      std::copy_n(remaining_.begin() + (pos + 1) * labels_, labels_, remaining_.begin() + pos * labels_);
      foreign_[pos] = foreign_[pos + 1];
      const auto& ev = product.move(product.log_move(pos)).log_label;
      LabelId id = graph.labels().id(ev->text());
      if (id == LabelIndex::kNone)
        ++foreign_[pos];
      else
        ++remaining_[pos * labels_ + id];
    }
  }

  std::vector<PartialAlignment> run(const Node& start, std::size_t wanted, SearchStats* stats) {
    if (Clock::now() >= limits_.deadline) throw Timeout("search deadline reached");
    std::vector<PartialAlignment> out;
    if (wanted == 0 || graph_.info(start).dead) return out;
    relax(start, 0, Cost{}, kNoParent, TransitionId{});
    std::unordered_set<std::uint32_t> collected;
    std::size_t pops = 0;
    // After the wanted-th goal, keep going through the rest of its unit f
    // level so the caller can break ties among equally ranked goals.
    std::optional<std::uint64_t> last_level;
    while (!open_.empty()) {
      if (last_level && open_.top().f.unit > *last_level) break;
      Entry e = open_.top();
      open_.pop();
      if ((++pops & 255) == 0 && Clock::now() >= limits_.deadline) throw Timeout("search deadline reached");
      const Record rec = records_[e.record];
      if (rec.g != e.g) continue;
      if (stats) ++stats->expanded;
      if (is_goal(rec) && collected.insert(rec.node->id).second) {
        out.push_back(collect(e.record));
        if (out.size() == wanted) {
          if (goal_ == GoalMode::ModelFinalMarking) break;  // a single goal marking, nothing to tie
          last_level = e.f.unit;
        }
      }
      expand(e.record);
    }
    if (stats) stats->stored += records_.size();
    return out;
  }

 private:
  static constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

  struct Record {
    const Node* node;
    std::uint32_t pos;
    Cost g;
    Cost h;
    std::uint32_t parent;
    TransitionId via;  // product transition from the parent
  };

  struct Entry {
    Cost f;
    Cost g;
    std::uint32_t pos;
    std::uint32_t node;
    std::uint64_t seq;
    std::uint32_t record;

    // Lower f first; among equal f prefer more trace progress, then the
    // lower marking id, then insertion order.
    friend bool operator>(const Entry& a, const Entry& b) {
      if (a.f != b.f) return a.f > b.f;
      if (a.pos != b.pos) return a.pos < b.pos;
      if (a.node != b.node) return a.node > b.node;
      return a.seq > b.seq;
    }
  };

  std::span<const std::uint32_t> remaining(std::uint32_t pos) const {
    return {remaining_.data() + std::size_t{pos} * labels_, labels_};
  }

  Cost heuristic(const MarkingInfo& info, std::uint32_t pos, Heuristic kind) const {
    auto counts = remaining(pos);
    std::uint64_t h = unreachable_events(info, counts, foreign_[pos]);
    if (kind == Heuristic::MarginalBound) h += missing_mandatory(info, counts);
    return Cost::units(h);
  }

  bool is_goal(const Record& r) const {
    return r.pos == length_ && (goal_ == GoalMode::AnyModelMarking || r.node->is_final);
  }

  void relax(const Node& node, std::uint32_t pos, Cost g, std::uint32_t parent, TransitionId via) {
    const std::uint64_t key = (std::uint64_t{node.id} << 32) | pos;
    auto it = index_.find(key);
    std::uint32_t idx;
    if (it == index_.end()) {
      const auto& info = graph_.info(node);
      if (info.dead) return;
      if (records_.size() >= limits_.state_cap) throw StateCapExceeded(limits_.state_cap);
      idx = static_cast<std::uint32_t>(records_.size());
      records_.push_back({&node, pos, g, heuristic(info, pos, heuristic_), parent, via});
      index_.emplace(key, idx);
    } else {
      idx = it->second;
      Record& r = records_[idx];
      if (r.g <= g) return;
      r.g = g;
      r.parent = parent;
      r.via = via;
    }
    const Record& r = records_[idx];
    open_.push(Entry{r.g + r.h, r.g, pos, node.id, seq_++, idx});
  }

  void expand(std::uint32_t idx) {
    const Record rec = records_[idx];
    for (const auto& e : rec.node->successors) {
      const TransitionId pt = product_.model_move(e.transition);
      relax(*e.target, rec.pos, rec.g + move_cost(product_.move(pt)), idx, pt);
    }
    if (rec.pos >= length_) return;
    const TransitionId log = product_.log_move(rec.pos);
    relax(*rec.node, rec.pos + 1, rec.g + Cost::units(1), idx, log);
    for (TransitionId pt : product_.sync_moves(rec.pos)) {
      const TransitionId mt = *product_.move(pt).model_transition;
      for (const auto& e : rec.node->successors) {
        if (e.transition == mt) {
          relax(*e.target, rec.pos + 1, rec.g, idx, pt);
          break;
        }
      }
    }
  }

  PartialAlignment collect(std::uint32_t idx) const {
    std::vector<TransitionId> path;
    for (std::uint32_t i = idx; records_[i].parent != kNoParent; i = records_[i].parent) path.push_back(records_[i].via);
    PartialAlignment out;
    out.alignment.moves.reserve(path.size());
    for (auto it = path.rbegin(); it != path.rend(); ++it) out.alignment.moves.push_back(product_.move(*it));
    out.alignment.cost = total_cost(out.alignment.moves);
    const Record& r = records_[idx];
    out.alignment.model_marking = r.node->marking;
    out.alignment.trace_position = product_.trace_first_event() + length_;
    const auto& info = graph_.info(*r.node);
    out.key = out.alignment.cost + heuristic(info, r.pos, heuristic_);
    out.bound = heuristic(info, r.pos, Heuristic::MarginalBound);
    out.tie_bound = Cost::units(std::max(out.bound.unit, next_blocked_ ? next_event_blocked(info, *next_blocked_) : 0));
    return out;
  }

  const ReachabilityGraph& graph_;
  const SyncProduct& product_;
  Heuristic heuristic_;
  GoalMode goal_;
  SearchLimits limits_;
  std::size_t labels_;
  std::uint32_t length_;
  std::vector<std::uint32_t> remaining_;
  std::vector<std::uint32_t> foreign_;
  const SuffixProfile* next_blocked_ = nullptr;
  std::vector<Record> records_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open_;
  std::uint64_t seq_ = 0;
};

// Ties on the unit part of the ranking key go to the lower cost plus full
// bound, then to the end marking that can take the next event right away:
// two end markings that explain the window equally well are told apart by
// what the rest of the trace still needs. Silent moves only count after that.
inline void sort_ranked(std::vector<PartialAlignment>& v) {
  std::stable_sort(v.begin(), v.end(), [](const PartialAlignment& a, const PartialAlignment& b) {
    if (a.key.unit != b.key.unit) return a.key.unit < b.key.unit;
    const auto full_a = (a.alignment.cost + a.bound).unit, full_b = (b.alignment.cost + b.bound).unit;
    if (full_a != full_b) return full_a < full_b;
    if (a.tie_bound.unit != b.tie_bound.unit) return a.tie_bound.unit < b.tie_bound.unit;
    if (a.key != b.key) return a.key < b.key;
    if (a.alignment.cost != b.alignment.cost) return a.alignment.cost < b.alignment.cost;
    return a.alignment.model_marking < b.alignment.model_marking;
  });
}

}  // namespace detail

/// Up to `opts.candidates` lowest-ranked alignments of `product`'s trace
/// window starting from `start`, with pairwise distinct end model markings,
/// sorted by ranking key. Dead end markings are never returned. Throws
/// NoAlignment when no goal is reachable.
inline std::vector<PartialAlignment> k_best_partial_alignments(const ReachabilityGraph& graph,
                                                               const SyncProduct& product,
                                                               const ReachabilityGraph::Node& start,
                                                               const SuffixProfile& suffix,
                                                               const PartialSearchOptions& opts,
                                                               SearchStats* stats = nullptr) {
  const bool full = opts.goal == GoalMode::ModelFinalMarking || opts.ranking == ExtensionRanking::MarginalBound;
  detail::ProductSearch search(graph, product, suffix,
                               full ? detail::Heuristic::MarginalBound : detail::Heuristic::UnreachableEvents,
                               opts.goal, opts.limits);
  auto out = search.run(start, opts.candidates, stats);
  if (out.empty())
    throw NoAlignment("no alignment of events [" + std::to_string(product.trace_first_event()) + "," +
                      std::to_string(product.trace_first_event() + product.trace_length()) + ") from " +
                      graph.model().format(start.marking));
  detail::sort_ranked(out);
  if (out.size() > opts.candidates) out.resize(opts.candidates);
  return out;
}

inline std::vector<PartialAlignment> k_best_partial_alignments(const ReachabilityGraph& graph,
                                                               const Marking& model_start, const TraceNet& window,
                                                               const SuffixProfile& suffix,
                                                               const PartialSearchOptions& opts,
                                                               SearchStats* stats = nullptr) {
  SyncProduct product(graph.model(), window, model_start);
  return k_best_partial_alignments(graph, product, graph.node(model_start), suffix, opts, stats);
}

/// Minimum-cost alignment of the whole trace against the model, by A* with
/// the marginal lower bound as heuristic.
inline Alignment optimal_alignment(const ReachabilityGraph& graph, const Trace& trace, const SearchLimits& limits = {},
                                   SearchStats* stats = nullptr) {
  const PetriNet& model = graph.model();
  if (graph.info(graph.root()).dead) throw Infeasible("model final marking is unreachable from its initial marking");
  SyncProduct product(model, trace_to_net(trace), model.initial_marking());
  PartialSearchOptions opts{1, GoalMode::ModelFinalMarking, ExtensionRanking::MarginalBound, limits};
  return k_best_partial_alignments(graph, product, graph.root(), SuffixProfile(graph.labels()), opts, stats)
      .front()
      .alignment;
}

/// Replays `moves` from `model_start` with the trace token on p'_{begin}.
/// Returns a description of the first inconsistency, or nullopt if the
/// alignment is a valid product execution ending at its recorded marking
/// with its recorded cost.
inline std::optional<std::string> check_alignment(const PetriNet& model, const Trace& trace,
                                                  const Marking& model_start, std::size_t begin,
                                                  const Alignment& a) {
  Marking m = model_start;
  std::size_t pos = begin;
  for (std::size_t i = 0; i < a.moves.size(); ++i) {
    const Move& mv = a.moves[i];
    const std::string at = "move " + std::to_string(i) + ": ";
    const bool has_model = mv.kind != MoveKind::LogMove;
    const bool has_log = mv.kind == MoveKind::LogMove || mv.kind == MoveKind::Synchronous;
    if (has_model != mv.model_transition.has_value() || has_log != mv.trace_event.has_value())
      return at + "sides do not match move kind";
    if (has_model) {
      const TransitionId t = *mv.model_transition;
      if (t.value >= model.transition_count()) return at + "unknown model transition";
      const Label& l = model.label(t);
      if (l.is_silent() != (mv.kind == MoveKind::SilentModelMove)) return at + "silent kind mismatch";
      if (!mv.model_label || *mv.model_label != l) return at + "model label mismatch";
      if (!is_enabled(model, m, t)) return at + "model transition not enabled";
      m = fire(model, m, t);
    }
    if (has_log) {
      if (*mv.trace_event != pos || pos >= trace.size()) return at + "trace event out of order";
      if (!mv.log_label || mv.log_label->text() != trace[pos]) return at + "log label mismatch";
      if (mv.kind == MoveKind::Synchronous && mv.model_label != mv.log_label) return at + "sync labels differ";
      ++pos;
    }
  }
  if (m != a.model_marking) return "final model marking mismatch";
  if (pos != a.trace_position) return "final trace position mismatch";
  if (total_cost(a.moves) != a.cost) return "recorded cost differs from move costs";
  return std::nullopt;
}

}  // namespace conles
