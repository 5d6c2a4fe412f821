#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "conles/cost.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"

namespace conles {

enum class MoveKind { Synchronous, LogMove, ModelMove, SilentModelMove };

inline std::string_view to_string(MoveKind k) {
  switch (k) {
    case MoveKind::Synchronous: return "sync";
    case MoveKind::LogMove: return "log";
    case MoveKind::ModelMove: return "model";
    case MoveKind::SilentModelMove: return "silent";
  }
  return "?";
}

/// One step of an alignment. `trace_event` is the absolute 0-based index of
/// the consumed event (transition t'_{trace_event+1}). Absent sides of the
/// label pair stand for the skip symbol.
struct Move {
  MoveKind kind = MoveKind::LogMove;
  std::optional<TransitionId> model_transition;
  std::optional<std::size_t> trace_event;
  std::optional<Label> model_label;
  std::optional<Label> log_label;

  friend bool operator==(const Move&, const Move&) = default;
};

inline std::string_view render(const std::optional<Label>& l) { return l ? l->text() : kSkipSymbol; }

inline Cost move_cost(const Move& m) {
  switch (m.kind) {
    case MoveKind::Synchronous: return Cost{};
    case MoveKind::SilentModelMove: return Cost::epsilon();
    case MoveKind::LogMove:
    case MoveKind::ModelMove: return Cost::units(1);
  }
  return Cost::units(1);
}

inline Cost total_cost(std::span<const Move> moves) {
  Cost c;
  for (const auto& m : moves) c += move_cost(m);
  return c;
}

/// Synchronous product of a process model and a trace chain, started at an
/// arbitrary model marking. The product net is materialized (places and
/// transitions); its reachability graph is explored lazily by the searches.
class SyncProduct {
 public:
  SyncProduct(const PetriNet& model, const TraceNet& trace, const Marking& model_start)
      : model_(&model), trace_first_(trace.first_event()), trace_length_(trace.length()) {
    const PetriNet& tn = trace.net();
    NetDefinition def;
    std::unordered_set<std::string> names;
    auto add_place = [&](const std::string& n) {
      if (!names.insert(n).second) throw Error("synchronous product name collision on '" + n + "'");
      def.places.push_back(n);
    };
    for (std::uint32_t p = 0; p < model.place_count(); ++p) add_place(model.place_name(PlaceId{p}));
    for (std::uint32_t p = 0; p < tn.place_count(); ++p) add_place(tn.place_name(PlaceId{p}));
    const std::uint32_t offset = static_cast<std::uint32_t>(model.place_count());

    auto model_arcs = [&](TransitionId t, const std::string& id) {
      for (const auto& tok : model.preset(t))
        for (std::uint32_t k = 0; k < tok.count; ++k) def.arcs.push_back({model.place_name(tok.place), id});
      for (const auto& tok : model.postset(t))
        for (std::uint32_t k = 0; k < tok.count; ++k) def.arcs.push_back({id, model.place_name(tok.place)});
    };
    auto trace_arcs = [&](std::size_t i, const std::string& id) {
      def.arcs.push_back({tn.place_name(PlaceId{std::uint32_t(i)}), id});
      def.arcs.push_back({id, tn.place_name(PlaceId{std::uint32_t(i + 1)})});
    };
    auto add_transition = [&](Move move, std::string id, Label label) {
      def.transitions.push_back({std::move(id), std::move(label)});
      moves_.push_back(std::move(move));
      return TransitionId{std::uint32_t(moves_.size() - 1)};
    };

    model_moves_.resize(model.transition_count());
    for (std::uint32_t i = 0; i < model.transition_count(); ++i) {
      TransitionId t{i};
      const Label& l = model.label(t);
      std::string id = "(" + model.transition_name(t) + "," + std::string(kSkipSymbol) + ")";
      model_arcs(t, id);
      Move mv{l.is_silent() ? MoveKind::SilentModelMove : MoveKind::ModelMove, t, std::nullopt, l, std::nullopt};
      model_moves_[i] = add_transition(std::move(mv), std::move(id), l);
    }
    log_moves_.resize(trace_length_);
    for (std::size_t i = 0; i < trace_length_; ++i) {
      Label l = Label::activity(std::string(trace.event(i)));
      std::string id = "(" + std::string(kSkipSymbol) + "," + tn.transition_name(TransitionId{std::uint32_t(i)}) + ")";
      trace_arcs(i, id);
      Move mv{MoveKind::LogMove, std::nullopt, trace_first_ + i, std::nullopt, l};
      log_moves_[i] = add_transition(std::move(mv), std::move(id), l);
    }
    sync_moves_.resize(trace_length_);
    for (std::size_t i = 0; i < trace_length_; ++i) {
      const std::string_view ev = trace.event(i);
      for (std::uint32_t m = 0; m < model.transition_count(); ++m) {
        TransitionId t{m};
        const Label& l = model.label(t);
        if (l.is_silent() || l.text() != ev) continue;
        std::string id = "(" + model.transition_name(t) + "," + tn.transition_name(TransitionId{std::uint32_t(i)}) + ")";
        model_arcs(t, id);
        trace_arcs(i, id);
        Move mv{MoveKind::Synchronous, t, trace_first_ + i, l, l};
        sync_moves_[i].push_back(add_transition(std::move(mv), std::move(id), l));
      }
    }
    for (const auto& tok : model_start.tokens()) def.initial_marking.emplace_back(model.place_name(tok.place), tok.count);
    def.initial_marking.emplace_back(tn.place_name(PlaceId{0}), 1);
    for (const auto& tok : model.final_marking().tokens())
      def.final_marking.emplace_back(model.place_name(tok.place), tok.count);
    def.final_marking.emplace_back(tn.place_name(PlaceId{std::uint32_t(trace_length_)}), 1);

    trace_place_offset_ = offset;
    net_ = PetriNet(std::move(def));
  }

  const PetriNet& net() const { return net_; }
  const PetriNet& model() const { return *model_; }
  const Move& move(TransitionId t) const { return moves_[t.value]; }

  /// |T^MM|, silent model moves included.
  std::size_t model_move_count() const { return model_moves_.size(); }
  std::size_t log_move_count() const { return log_moves_.size(); }
  std::size_t sync_move_count() const {
    std::size_t n = 0;
    for (const auto& v : sync_moves_) n += v.size();
    return n;
  }

  /// Initial product marking: model start plus the first trace place.
  const Marking& initial_marking() const { return net_.initial_marking(); }
  /// Model final marking plus the last trace place.
  const Marking& final_marking() const { return net_.final_marking(); }

  std::size_t trace_first_event() const { return trace_first_; }
  std::size_t trace_length() const { return trace_length_; }

  TransitionId model_move(TransitionId model_t) const { return model_moves_[model_t.value]; }
  TransitionId log_move(std::size_t local_pos) const { return log_moves_[local_pos]; }
  std::span<const TransitionId> sync_moves(std::size_t local_pos) const { return sync_moves_[local_pos]; }

  /// Product marking with the model part `model_marking` and the trace token
  /// at local chain position `local_pos`.
  Marking product_marking(const Marking& model_marking, std::size_t local_pos) const {
    Marking m = model_marking;
    m.add(PlaceId{trace_place_offset_ + std::uint32_t(local_pos)});
    return m;
  }

  Marking model_projection(const Marking& product) const {
    Marking m;
    for (const auto& t : product.tokens())
      if (t.place.value < trace_place_offset_) m.add(t.place, t.count);
    return m;
  }

 private:
  const PetriNet* model_;
  std::size_t trace_first_;
  std::size_t trace_length_;
  std::uint32_t trace_place_offset_ = 0;
  PetriNet net_;
  std::vector<Move> moves_;
  std::vector<TransitionId> model_moves_;
  std::vector<TransitionId> log_moves_;
  std::vector<std::vector<TransitionId>> sync_moves_;
};

inline SyncProduct build_sync_product(const PetriNet& model, const TraceNet& trace, const Marking& model_start) {
  return SyncProduct(model, trace, model_start);
}

}  // namespace conles
