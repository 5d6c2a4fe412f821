#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "conles/cost.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"

namespace conles {

inline constexpr std::size_t kDefaultStateCap = 1'000'000;

/// Dense id of a non-silent activity label of the model.
using LabelId = std::uint32_t;

/// Bidirectional map between the model's activity names and dense ids.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(const PetriNet& model) {
    transition_label_.resize(model.transition_count(), kNone);
    for (std::uint32_t t = 0; t < model.transition_count(); ++t) {
      const Label& l = model.label(TransitionId{t});
      if (l.is_silent()) continue;
      auto [it, inserted] = ids_.emplace(std::string(l.text()), LabelId(names_.size()));
      if (inserted) names_.emplace_back(l.text());
      transition_label_[t] = it->second;
    }
  }

  static constexpr LabelId kNone = ~LabelId{0};

  std::size_t size() const { return names_.size(); }
  const std::string& name(LabelId id) const { return names_[id]; }
  /// kNone for activities the model never produces.
  LabelId id(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    return it == ids_.end() ? kNone : it->second;
  }
  /// kNone for silent transitions.
  LabelId of(TransitionId t) const { return transition_label_[t.value]; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelId> ids_;
  std::vector<LabelId> transition_label_;
};

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::size_t n) : bits_((n + 63) / 64, 0) {}

  void insert(LabelId l) { bits_[l / 64] |= std::uint64_t{1} << (l % 64); }
  void erase(LabelId l) { bits_[l / 64] &= ~(std::uint64_t{1} << (l % 64)); }
  bool contains(LabelId l) const { return l / 64 < bits_.size() && (bits_[l / 64] >> (l % 64)) & 1; }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : bits_) n += std::popcount(w);
    return n;
  }
  bool empty() const { return size() == 0; }
  bool is_subset_of(const LabelSet& other) const {
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] & ~(i < other.bits_.size() ? other.bits_[i] : 0)) return false;
    return true;
  }
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < bits_.size(); ++i)
      for (auto w = bits_[i]; w; w &= w - 1) f(LabelId(i * 64 + std::countr_zero(w)));
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::uint64_t> bits_;
};

/// Global information about one model marking.
struct MarkingInfo {
  LabelSet reachable;  // activities firable on some continuation
  LabelSet mandatory;  // activities fired on every path to the final marking
  LabelSet ready;      // activities firable after silent moves only
  bool dead = false;   // final marking unreachable; `mandatory` is then empty
};

/// Multiset of activities in the unconsumed part of a trace. Events whose
/// activity the model never produces are kept as a single `foreign` count.
class SuffixProfile {
 public:
  SuffixProfile() = default;
  explicit SuffixProfile(const LabelIndex& labels) : counts_(labels.size(), 0) {}

  SuffixProfile(const LabelIndex& labels, const Trace& trace, std::size_t from, std::size_t to)
      : SuffixProfile(labels) {
    for (std::size_t i = from; i < to; ++i) add(labels, trace[i]);
    if (from < to) next_ = labels.id(trace[from]);
  }

  SuffixProfile(const LabelIndex& labels, const std::map<std::string, std::uint32_t>& counts)
      : SuffixProfile(labels) {
    for (const auto& [name, n] : counts)
      for (std::uint32_t k = 0; k < n; ++k) add(labels, name);
  }

  void add(const LabelIndex& labels, std::string_view activity) {
    LabelId id = labels.id(activity);
    if (id == LabelIndex::kNone)
      ++foreign_;
    else
      ++counts_[id];
  }

  std::uint32_t count(LabelId l) const { return counts_[l]; }
  std::uint32_t foreign() const { return foreign_; }
  std::span<const std::uint32_t> counts() const { return counts_; }
  /// First remaining event (kNone if foreign); empty for an empty or unordered suffix.
  std::optional<LabelId> next() const { return next_; }
  std::uint64_t total() const {
    std::uint64_t n = foreign_;
    for (auto c : counts_) n += c;
    return n;
  }

 private:
  std::vector<std::uint32_t> counts_;
  std::uint32_t foreign_ = 0;
  std::optional<LabelId> next_;
};

/// Events of the remaining trace whose activity cannot occur from the marking.
inline std::uint64_t unreachable_events(const MarkingInfo& info, std::span<const std::uint32_t> counts,
                                        std::uint32_t foreign) {
  std::uint64_t n = foreign;
  for (LabelId l = 0; l < counts.size(); ++l)
    if (counts[l] != 0 && !info.reachable.contains(l)) n += counts[l];
  return n;
}

/// Mandatory activities that do not occur in the remaining trace.
inline std::uint64_t missing_mandatory(const MarkingInfo& info, std::span<const std::uint32_t> counts) {
  std::uint64_t n = 0;
  info.mandatory.for_each([&](LabelId l) { n += counts[l] == 0; });
  return n;
}

/// Reachability graph of the process model with memoized per-marking
/// reachable/mandatory activity sets.
///
/// The closure of the initial marking is built on construction; any other
/// marking is added together with its closure on first request. Nodes are
/// never removed, and a node is published only after its whole forward
/// closure is present, so MarkingInfo can be computed without locking the
/// graph. Safe for concurrent use.
class ReachabilityGraph {
 public:
  struct Node;
  struct Edge {
    TransitionId transition;
    const Node* target;
  };
  struct Node {
    std::uint32_t id = 0;
    Marking marking;
    std::vector<Edge> successors;
    bool is_final = false;

   private:
    friend class ReachabilityGraph;
    mutable std::once_flag info_once;
    mutable MarkingInfo info;
  };

  /// Throws StateCapExceeded if the closure of the initial marking holds
  /// more than `state_cap` markings.
  explicit ReachabilityGraph(PetriNet model, std::size_t state_cap = kDefaultStateCap)
      : model_(std::move(model)), labels_(model_), state_cap_(state_cap) {
    root_ = &expand(model_.initial_marking());
  }

  ReachabilityGraph(const ReachabilityGraph&) = delete;
  ReachabilityGraph& operator=(const ReachabilityGraph&) = delete;

  const PetriNet& model() const { return model_; }
  const LabelIndex& labels() const { return labels_; }
  std::size_t state_cap() const { return state_cap_; }

  const Node& root() const { return *root_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return nodes_.size();
  }

  /// Node for `m`, exploring its closure first if it is new.
  const Node& node(const Marking& m) const {
    {
      std::shared_lock lock(mutex_);
      auto it = index_.find(m);
      if (it != index_.end()) return *it->second;
    }
    return expand(m);
  }

  const Node& node(std::uint32_t id) const {
    std::shared_lock lock(mutex_);
    return *nodes_.at(id);
  }

  const MarkingInfo& info(const Node& n) const {
    std::call_once(n.info_once, [&] { n.info = compute_info(n); });
    return n.info;
  }
  const MarkingInfo& info(const Marking& m) const { return info(node(m)); }

  LabelSet reachable_labels(const Marking& m) const { return info(m).reachable; }

  /// Throws DeadMarking if the final marking is unreachable from `m`.
  LabelSet mandatory_labels(const Marking& m) const {
    const auto& i = info(m);
    if (i.dead) throw DeadMarking("final marking unreachable from " + model_.format(m));
    return i.mandatory;
  }

  std::vector<std::string> names(const LabelSet& s) const {
    std::vector<std::string> out;
    s.for_each([&](LabelId l) { out.push_back(labels_.name(l)); });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  const Node& expand(const Marking& start) const {
    std::unique_lock lock(mutex_);
    if (auto it = index_.find(start); it != index_.end()) return *it->second;

    // Explore into a staging area; publish only once the closure is complete.
    std::vector<std::unique_ptr<Node>> fresh;
    std::unordered_map<Marking, Node*, MarkingHash> fresh_index;
    auto lookup = [&](const Marking& m) -> Node* {
      if (auto it = index_.find(m); it != index_.end()) return it->second;
      if (auto it = fresh_index.find(m); it != fresh_index.end()) return it->second;
      if (nodes_.size() + fresh.size() >= state_cap_) throw StateCapExceeded(state_cap_);
      auto n = std::make_unique<Node>();
      n->id = static_cast<std::uint32_t>(nodes_.size() + fresh.size());
      n->marking = m;
      n->is_final = m == model_.final_marking();
      Node* raw = n.get();
      fresh.push_back(std::move(n));
      fresh_index.emplace(m, raw);
      return raw;
    };

    Node* first = lookup(start);
    for (std::size_t head = 0; head < fresh.size(); ++head) {
      Node* n = fresh[head].get();
      for (std::uint32_t t = 0; t < model_.transition_count(); ++t) {
        TransitionId tid{t};
        if (!is_enabled(model_, n->marking, tid)) continue;
        Node* target = lookup(fire(model_, n->marking, tid));
        n->successors.push_back({tid, target});
      }
    }
    for (auto& n : fresh) {
      index_.emplace(n->marking, n.get());
      nodes_.push_back(std::move(n));
    }
    return *first;
  }

  MarkingInfo compute_info(const Node& start) const {
    MarkingInfo info{LabelSet(labels_.size()), LabelSet(labels_.size()), LabelSet(labels_.size()), false};
    // Silent closure: activities firable next.
    {
      std::vector<const Node*> todo{&start};
      std::unordered_set<const Node*> done{&start};
      while (!todo.empty()) {
        const Node* n = todo.back();
        todo.pop_back();
        for (const auto& e : n->successors) {
          if (LabelId l = labels_.of(e.transition); l != LabelIndex::kNone)
            info.ready.insert(l);
          else if (done.insert(e.target).second)
            todo.push_back(e.target);
        }
      }
    }
    // Forward closure: reachable activities and whether the final marking is reachable.
    std::vector<const Node*> order;
    std::unordered_map<const Node*, std::size_t> seen;
    order.push_back(&start);
    seen.emplace(&start, 0);
    bool final_reachable = false;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const Node* n = order[head];
      final_reachable |= n->is_final;
      for (const auto& e : n->successors) {
        if (LabelId l = labels_.of(e.transition); l != LabelIndex::kNone) info.reachable.insert(l);
        if (seen.emplace(e.target, order.size()).second) order.push_back(e.target);
      }
    }
    if (!final_reachable) {
      info.dead = true;
      return info;
    }
    // An activity is mandatory iff deleting its transitions disconnects the final marking.
    std::vector<char> visited(order.size());
    std::vector<const Node*> stack;
    info.reachable.for_each([&](LabelId banned) {
      std::fill(visited.begin(), visited.end(), 0);
      stack.assign(1, &start);
      visited[0] = 1;
      bool reached = false;
      while (!stack.empty() && !reached) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->is_final) {
          reached = true;
          break;
        }
        for (const auto& e : n->successors) {
          if (labels_.of(e.transition) == banned) continue;
          auto& v = visited[seen.at(e.target)];
          if (!v) {
            v = 1;
            stack.push_back(e.target);
          }
        }
      }
      if (!reached) info.mandatory.insert(banned);
    });
    return info;
  }

  PetriNet model_;
  LabelIndex labels_;
  std::size_t state_cap_;
  mutable std::shared_mutex mutex_;
  mutable std::deque<std::unique_ptr<Node>> nodes_;
  mutable std::unordered_map<Marking, Node*, MarkingHash> index_;
  const Node* root_ = nullptr;
};

inline std::shared_ptr<ReachabilityGraph> build_model_reachability(const PetriNet& model,
                                                                   std::size_t state_cap = kDefaultStateCap) {
  return std::make_shared<ReachabilityGraph>(model, state_cap);
}

/// 1 when the next remaining event cannot be matched without a unit-cost
/// move first (it is foreign, or no silent path leads to it), else 0. Also a
/// lower bound, but order-aware where the marginal bound is not.
inline std::uint64_t next_event_blocked(const MarkingInfo& info, const SuffixProfile& suffix) {
  const auto next = suffix.next();
  return next && (*next == LabelIndex::kNone || !info.ready.contains(*next));
}

/// Lower bound on the unit cost of aligning the remaining trace from `m`:
/// remaining events whose activity is unreachable (each forces a log move)
/// plus mandatory activities absent from the remainder (each forces a model
/// move). Throws DeadMarking.
inline Cost marginal_lower_bound(const ReachabilityGraph& graph, const Marking& m, const SuffixProfile& suffix) {
  const auto& info = graph.info(m);
  if (info.dead) throw DeadMarking("final marking unreachable from " + graph.model().format(m));
  return Cost::units(unreachable_events(info, suffix.counts(), suffix.foreign()) +
                     missing_mandatory(info, suffix.counts()));
}

}  // namespace conles
