#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "conles/cost.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"
#include "conles/reach_analysis.hpp"
#include "conles/search.hpp"
#include "conles/sync_product.hpp"

namespace conles {

/// How candidates are ranked when the candidate list is cut back to N_c
/// after each window.
enum class RetentionRanking {
  CostPlusBound,  // accumulated cost + marginal lower bound for the rest of the trace
  CostOnly,       // accumulated cost alone (ablation)
};

struct ConlesConfig {
  std::size_t window_length = 50;
  std::size_t candidates = 3;
  std::size_t state_cap = kDefaultStateCap;
  std::chrono::milliseconds timeout{120'000};
  /// Use the optimal aligner when the whole trace fits in one window.
  bool oracle_fallback = false;
  ExtensionRanking extension_ranking = ExtensionRanking::UnreachableEvents;
  RetentionRanking retention_ranking = RetentionRanking::CostPlusBound;

  void check() const {
    if (window_length < 1) throw std::invalid_argument("window length must be at least 1");
    if (candidates < 1) throw std::invalid_argument("candidate count must be at least 1");
  }
};

/// Half-open event range [begin, end) of one window.
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

/// Contiguous windows of `window_length` events covering the trace; only the
/// last may be shorter. An empty trace yields no windows.
inline std::vector<Window> split_trace(std::size_t trace_length, std::size_t window_length) {
  if (window_length < 1) throw std::invalid_argument("window length must be at least 1");
  std::vector<Window> out;
  for (std::size_t j = 0; j < trace_length; j += window_length)
    out.push_back({j, std::min(trace_length, j + window_length)});
  return out;
}

inline std::vector<Window> split_trace(const Trace& trace, std::size_t window_length) {
  return split_trace(trace.size(), window_length);
}

struct CandidateAlignment {
  std::vector<Move> moves;
  Cost cost;
  Marking model_marking;
  std::size_t window_index = 0;  // windows consumed so far
  Cost key;                      // retention key
};

struct WindowStats {
  Window window;
  std::size_t candidates_in = 0;  // candidates extended
  std::size_t extensions = 0;     // partial alignments produced before retention
  std::size_t nodes_expanded = 0;
  double wall_ms = 0;
};

struct AlignmentResult {
  Alignment alignment;
  std::uint64_t unit_cost = 0;
  std::uint64_t silent_count = 0;
  std::vector<WindowStats> windows;
  double wall_ms = 0;
  ConlesConfig config;

  std::size_t nodes_expanded() const {
    std::size_t n = 0;
    for (const auto& w : windows) n += w.nodes_expanded;
    return n;
  }
};

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Sliding-window aligner. Carries up to N_c candidate alignments with
/// distinct model markings from window to window; the last window is closed
/// at the model final marking. Thread-safe: one instance may serve
/// concurrent align() calls.
class ConlesAligner {
 public:
  ConlesAligner(std::shared_ptr<const ReachabilityGraph> graph, ConlesConfig config)
      : graph_(std::move(graph)), config_(config) {
    config_.check();
  }

  const ConlesConfig& config() const { return config_; }
  const ReachabilityGraph& graph() const { return *graph_; }

  AlignmentResult align(const Trace& trace) const {
    const auto started = Clock::now();
    const auto deadline = deadline_from(started);
    const ReachabilityGraph& graph = *graph_;
    if (graph.info(graph.root()).dead) throw Infeasible("model final marking is unreachable from its initial marking");

    AlignmentResult result;
    result.config = config_;

    if (config_.oracle_fallback && trace.size() <= config_.window_length) {
      SearchStats stats;
      result.alignment = optimal_alignment(graph, trace, {config_.state_cap, deadline}, &stats);
      result.windows.push_back({{0, trace.size()}, 1, 1, stats.expanded, elapsed_ms(started)});
      return finish(std::move(result), started);
    }

    auto windows = split_trace(trace, config_.window_length);
    const Window last = windows.empty() ? Window{0, 0} : windows.back();
    if (!windows.empty()) windows.pop_back();
    auto candidates = run_windows(trace, windows, deadline, &result.windows);

    // Final window: close every candidate at the model final marking.
    const auto t0 = Clock::now();
    WindowStats stats{last, candidates.size(), 0, 0, 0};
    TraceNet net(trace, last.begin, last.end);
    SyncProduct product(graph.model(), net, candidates.front().node->marking);
    const SuffixProfile empty(graph.labels());
    const PartialSearchOptions opts{1, GoalMode::ModelFinalMarking, config_.extension_ranking,
                                    {config_.state_cap, deadline}};
    std::optional<Candidate> best;
    for (const auto& c : candidates) {
      SearchStats s;
      std::vector<PartialAlignment> ext;
      try {
        ext = k_best_partial_alignments(graph, product, *c.node, empty, opts, &s);
      } catch (const NoAlignment&) {
        stats.nodes_expanded += s.expanded;
        continue;
      }
      stats.nodes_expanded += s.expanded;
      ++stats.extensions;
      Candidate done = extend(c, std::move(ext.front()));
      if (!best || done.cost < best->cost) best = std::move(done);
    }
    stats.wall_ms = elapsed_ms(t0);
    result.windows.push_back(stats);
    if (!best) throw NoAlignment("every candidate alignment died in the final window");

    result.alignment.moves = flatten(best->path);
    result.alignment.cost = best->cost;
    result.alignment.model_marking = best->node->marking;
    result.alignment.trace_position = trace.size();
    return finish(std::move(result), started);
  }

  /// Candidate list held after the first `windows_done` windows (all of them
  /// non-final). Zero returns the single empty candidate.
  std::vector<CandidateAlignment> intermediate_candidates(const Trace& trace, std::size_t windows_done) const {
    auto windows = split_trace(trace, config_.window_length);
    if (windows_done >= std::max<std::size_t>(windows.size(), 1))
      throw IndexError("only " + std::to_string(windows.empty() ? 0 : windows.size() - 1) +
                       " non-final windows in this trace");
    windows.resize(windows_done);
    const auto deadline = deadline_from(Clock::now());
    std::vector<CandidateAlignment> out;
    for (auto& c : run_windows(trace, windows, deadline, nullptr))
      out.push_back({flatten(c.path), c.cost, c.node->marking, windows_done, c.key});
    return out;
  }

 private:
  using Node = ReachabilityGraph::Node;

  struct Segment {
    std::vector<Move> moves;
    std::shared_ptr<const Segment> prev;
  };

  struct Candidate {
    std::shared_ptr<const Segment> path;
    Cost cost;
    const Node* node = nullptr;
    Cost key;
    Cost tie;  // cost + tie_bound of the last extension
  };

  Clock::time_point deadline_from(Clock::time_point start) const {
    if (config_.timeout >= std::chrono::duration_cast<std::chrono::milliseconds>(Clock::time_point::max() - start))
      return Clock::time_point::max();
    return start + config_.timeout;
  }

  static std::vector<Move> flatten(const std::shared_ptr<const Segment>& path) {
    std::vector<const Segment*> chain;
    std::size_t n = 0;
    for (const Segment* s = path.get(); s; s = s->prev.get()) {
      chain.push_back(s);
      n += s->moves.size();
    }
    std::vector<Move> out;
    out.reserve(n);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      out.insert(out.end(), (*it)->moves.begin(), (*it)->moves.end());
    return out;
  }

  Candidate extend(const Candidate& parent, PartialAlignment&& ext) const {
    Candidate c;
    c.cost = parent.cost + ext.alignment.cost;
    c.node = &graph_->node(ext.alignment.model_marking);
    c.key = config_.retention_ranking == RetentionRanking::CostPlusBound ? c.cost + ext.bound : c.cost;
    c.tie = c.cost + ext.tie_bound;
    c.path = std::make_shared<const Segment>(Segment{std::move(ext.alignment.moves), parent.path});
    return c;
  }

  std::vector<Candidate> run_windows(const Trace& trace, const std::vector<Window>& windows,
                                     Clock::time_point deadline, std::vector<WindowStats>* stats_out) const {
    const ReachabilityGraph& graph = *graph_;
    std::vector<Candidate> candidates{Candidate{nullptr, Cost{}, &graph.root(), Cost{}, Cost{}}};
    for (const Window& w : windows) {
      const auto t0 = Clock::now();
      WindowStats stats{w, candidates.size(), 0, 0, 0};
      TraceNet net(trace, w.begin, w.end);
      SyncProduct product(graph.model(), net, candidates.front().node->marking);
      const SuffixProfile suffix(graph.labels(), trace, w.end, trace.size());
      const PartialSearchOptions opts{config_.candidates, GoalMode::AnyModelMarking, config_.extension_ranking,
                                      {config_.state_cap, deadline}};

      std::vector<Candidate> extended;
      for (const auto& c : candidates) {
        SearchStats s;
        try {
          for (auto& ext : k_best_partial_alignments(graph, product, *c.node, suffix, opts, &s))
            extended.push_back(extend(c, std::move(ext)));
        } catch (const NoAlignment&) {
        }
        stats.nodes_expanded += s.expanded;
      }
      stats.extensions = extended.size();

      // Keep the cheapest extension per model marking, then the best N_c.
      std::stable_sort(extended.begin(), extended.end(), [](const Candidate& a, const Candidate& b) {
        if (a.key.unit != b.key.unit) return a.key.unit < b.key.unit;
        if (a.tie.unit != b.tie.unit) return a.tie.unit < b.tie.unit;
        if (a.key != b.key) return a.key < b.key;
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.node->marking < b.node->marking;
      });
      std::vector<Candidate> kept;
      std::unordered_set<const Node*> seen;
      for (auto& c : extended) {
        if (kept.size() == config_.candidates) break;
        if (seen.insert(c.node).second) kept.push_back(std::move(c));
      }
      if (kept.empty())
        throw NoAlignment("every candidate alignment died in window [" + std::to_string(w.begin) + "," +
                          std::to_string(w.end) + ")");
      candidates = std::move(kept);
      stats.wall_ms = elapsed_ms(t0);
      if (stats_out) stats_out->push_back(stats);
    }
    return candidates;
  }

  static AlignmentResult finish(AlignmentResult r, Clock::time_point started) {
    r.unit_cost = r.alignment.cost.unit;
    r.silent_count = r.alignment.cost.silent;
    r.wall_ms = elapsed_ms(started);
    return r;
  }

  std::shared_ptr<const ReachabilityGraph> graph_;
  ConlesConfig config_;
};

/// One-shot convenience: builds the model analysis and aligns one trace.
inline AlignmentResult conles_align(const PetriNet& model, const Trace& trace, const ConlesConfig& config = {}) {
  return ConlesAligner(build_model_reachability(model, config.state_cap), config).align(trace);
}

}  // namespace conles
