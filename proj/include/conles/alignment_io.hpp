#pragma once

// Alignment serialization.
//
// JSON (one object per line):
//   {"case", "outcome", "unit_cost", "silent_count",
//    "moves": [{"kind", "log", "model", "transition"}],
//    "windows": [{"begin", "end", "candidates_in", "extensions", "nodes_expanded", "wall_ms"}],
//    "wall_ms"}
// Skips are JSON null; silent model labels are "τ". Failed cases carry only
// case, outcome and error. wall_ms fields are dropped when timing is off so
// that reruns are byte-identical.
//
// TSV:
//   case <id> unit_cost <u> silent_count <s>
//   log   <e1> <e2> ...      (≫ for a skip)
//   model <m1> <m2> ...      (≫ for a skip, τ for silent)

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conles/cost.hpp"
#include "conles/engine.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"
#include "conles/sync_product.hpp"

namespace conles {

enum class OutputFormat { Json, Tsv };

inline OutputFormat parse_output_format(std::string_view name) {
  if (name == "json") return OutputFormat::Json;
  if (name == "tsv") return OutputFormat::Tsv;
  throw ParseError("unknown output format '" + std::string(name) + "'");
}

struct WriteOptions {
  bool timing = true;
};

namespace detail {

inline nlohmann::ordered_json label_json(const std::optional<Label>& l) {
  if (!l) return nullptr;
  return l->text();
}

}  // namespace detail

inline nlohmann::ordered_json alignment_json(const std::string& case_id, const AlignmentResult& r,
                                             const PetriNet& model, const WriteOptions& opts = {}) {
  nlohmann::ordered_json j;
  j["case"] = case_id;
  j["outcome"] = "ok";
  j["unit_cost"] = r.unit_cost;
  j["silent_count"] = r.silent_count;
  auto& moves = j["moves"] = nlohmann::ordered_json::array();
  for (const Move& m : r.alignment.moves) {
    nlohmann::ordered_json mj;
    mj["kind"] = std::string(to_string(m.kind));
    mj["log"] = detail::label_json(m.log_label);
    mj["model"] = detail::label_json(m.model_label);
    if (m.model_transition)
      mj["transition"] = model.transition_name(*m.model_transition);
    else
      mj["transition"] = nullptr;
    moves.push_back(std::move(mj));
  }
  auto& windows = j["windows"] = nlohmann::ordered_json::array();
  for (const WindowStats& w : r.windows) {
    nlohmann::ordered_json wj;
    wj["begin"] = w.window.begin;
    wj["end"] = w.window.end;
    wj["candidates_in"] = w.candidates_in;
    wj["extensions"] = w.extensions;
    wj["nodes_expanded"] = w.nodes_expanded;
    if (opts.timing) wj["wall_ms"] = w.wall_ms;
    windows.push_back(std::move(wj));
  }
  if (opts.timing) j["wall_ms"] = r.wall_ms;
  return j;
}

inline nlohmann::ordered_json failure_json(const std::string& case_id, std::string_view outcome,
                                           std::string_view error) {
  nlohmann::ordered_json j;
  j["case"] = case_id;
  j["outcome"] = std::string(outcome);
  j["error"] = std::string(error);
  return j;
}

inline std::string write_alignment_tsv(const std::string& case_id, const AlignmentResult& r) {
  std::string out = "case\t" + case_id + "\tunit_cost\t" + std::to_string(r.unit_cost) + "\tsilent_count\t" +
                    std::to_string(r.silent_count) + "\n";
  std::string log = "log", model = "model";
  for (const Move& m : r.alignment.moves) {
    (log += '\t') += render(m.log_label);
    (model += '\t') += render(m.model_label);
  }
  return out + log + "\n" + model + "\n";
}

/// One record: a JSON line or a three-row TSV block.
inline std::string write_alignment(const std::string& case_id, const AlignmentResult& r, const PetriNet& model,
                                   OutputFormat format, const WriteOptions& opts = {}) {
  if (format == OutputFormat::Tsv) return write_alignment_tsv(case_id, r);
  return alignment_json(case_id, r, model, opts).dump(-1, ' ', false) + "\n";
}

inline std::string write_failure(const std::string& case_id, std::string_view outcome, std::string_view error,
                                 OutputFormat format) {
  if (format == OutputFormat::Tsv)
    return "case\t" + case_id + "\toutcome\t" + std::string(outcome) + "\terror\t" + std::string(error) + "\n";
  return failure_json(case_id, outcome, error).dump(-1, ' ', false) + "\n";
}

/// Moves recovered from a JSON record, resolved against `model` and `trace`.
/// Throws ParseError when a move names an unknown transition or a log label
/// that does not match the next trace event.
inline std::vector<Move> read_alignment_moves(const nlohmann::json& record, const PetriNet& model,
                                              const Trace& trace) {
  std::vector<Move> out;
  std::size_t pos = 0;
  try {
    for (const auto& mj : record.at("moves")) {
      Move m;
      const std::string kind = mj.at("kind").get<std::string>();
      if (kind == "sync")
        m.kind = MoveKind::Synchronous;
      else if (kind == "log")
        m.kind = MoveKind::LogMove;
      else if (kind == "model")
        m.kind = MoveKind::ModelMove;
      else if (kind == "silent")
        m.kind = MoveKind::SilentModelMove;
      else
        throw ParseError("unknown move kind '" + kind + "'");
      if (!mj.at("transition").is_null()) {
        const auto name = mj.at("transition").get<std::string>();
        auto t = model.find_transition(name);
        if (!t) throw ParseError("unknown transition '" + name + "'");
        m.model_transition = *t;
        m.model_label = model.label(*t);
      }
      if (!mj.at("log").is_null()) {
        const auto label = mj.at("log").get<std::string>();
        if (pos >= trace.size() || trace[pos] != label)
          throw ParseError("log move '" + label + "' does not match trace event " + std::to_string(pos));
        m.trace_event = pos++;
        m.log_label = Label::activity(label);
      }
      out.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed alignment record: ") + e.what());
  }
  return out;
}

}  // namespace conles
