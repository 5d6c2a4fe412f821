#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "conles/errors.hpp"

namespace conles {

template <typename Tag>
struct Id {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const Id&) const = default;
};

using PlaceId = Id<struct PlaceTag>;
using TransitionId = Id<struct TransitionTag>;

inline constexpr std::string_view kSilentSymbol = "τ";
inline constexpr std::string_view kSkipSymbol = "≫";

/// Transition label: an activity name or the silent symbol.
class Label {
 public:
  Label() = default;  // silent

  static Label silent() { return Label{}; }
  static Label activity(std::string name) {
    Label l;
    l.name_ = std::move(name);
    return l;
  }

  bool is_silent() const { return !name_.has_value(); }
  /// Activity name; the silent symbol for silent labels.
  std::string_view text() const { return name_ ? std::string_view(*name_) : kSilentSymbol; }

  friend bool operator==(const Label&, const Label&) = default;

 private:
  std::optional<std::string> name_;
};

inline bool is_reserved_label(std::string_view name) {
  return name == kSilentSymbol || name == kSkipSymbol;
}

struct Token {
  PlaceId place;
  std::uint32_t count = 0;
  constexpr auto operator<=>(const Token&) const = default;
};

/// Multiset of places. Only places holding at least one token are stored,
/// kept sorted by place id, so equality and hashing are order-independent.
class Marking {
 public:
  Marking() = default;
  Marking(std::initializer_list<Token> tokens) {
    for (const auto& t : tokens) add(t.place, t.count);
  }

  static Marking of(std::initializer_list<PlaceId> places) {
    Marking m;
    for (auto p : places) m.add(p);
    return m;
  }

  std::uint32_t count(PlaceId p) const {
    auto it = find(p);
    return it != tokens_.end() && it->place == p ? it->count : 0;
  }

  void add(PlaceId p, std::uint32_t n = 1) {
    if (n == 0) return;
    auto it = find(p);
    if (it != tokens_.end() && it->place == p)
      it->count += n;
    else
      tokens_.insert(it, Token{p, n});
  }

  /// Removes `n` tokens from `p`; returns false and leaves the marking
  /// untouched if fewer are present.
  bool remove(PlaceId p, std::uint32_t n = 1) {
    if (n == 0) return true;
    auto it = find(p);
    if (it == tokens_.end() || it->place != p || it->count < n) return false;
    it->count -= n;
    if (it->count == 0) tokens_.erase(it);
    return true;
  }

  std::span<const Token> tokens() const { return tokens_; }
  bool empty() const { return tokens_.empty(); }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& t : tokens_) n += t.count;
    return n;
  }

  Marking& operator+=(const Marking& other) {
    for (const auto& t : other.tokens_) add(t.place, t.count);
    return *this;
  }
  friend Marking operator+(Marking a, const Marking& b) { return a += b; }

  friend bool operator==(const Marking&, const Marking&) = default;
  friend auto operator<=>(const Marking& a, const Marking& b) { return a.tokens_ <=> b.tokens_; }

  std::size_t hash() const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& t : tokens_) {
      h ^= (std::size_t{t.place.value} << 20 ^ t.count) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }

 private:
  std::vector<Token>::iterator find(PlaceId p) {
    return std::lower_bound(tokens_.begin(), tokens_.end(), p,
                            [](const Token& t, PlaceId q) { return t.place < q; });
  }
  std::vector<Token>::const_iterator find(PlaceId p) const {
    return std::lower_bound(tokens_.begin(), tokens_.end(), p,
                            [](const Token& t, PlaceId q) { return t.place < q; });
  }

  std::vector<Token> tokens_;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const { return m.hash(); }
};

/// Name-level description of a labeled Petri net as read from a file or
/// assembled by hand. May be invalid; see validate().
struct NetDefinition {
  struct Transition {
    std::string id;
    Label label;
  };
  struct Arc {
    std::string source;
    std::string target;
  };
  using NamedMarking = std::vector<std::pair<std::string, std::uint32_t>>;

  std::vector<std::string> places;
  std::vector<Transition> transitions;
  std::vector<Arc> arcs;
  NamedMarking initial_marking;
  NamedMarking final_marking;
};

/// Checks every structural invariant of a labeled Petri net. Returns one
/// human-readable entry per violation; empty iff the net is valid.
inline std::vector<std::string> validate(const NetDefinition& def) {
  std::vector<std::string> out;
  std::unordered_set<std::string> places, transitions;
  for (const auto& p : def.places) {
    if (p.empty()) out.push_back("place with empty identifier");
    if (!places.insert(p).second) out.push_back("duplicate place '" + p + "'");
  }
  for (const auto& t : def.transitions) {
    if (t.id.empty()) out.push_back("transition with empty identifier");
    if (!transitions.insert(t.id).second) out.push_back("duplicate transition '" + t.id + "'");
    if (places.contains(t.id)) out.push_back("'" + t.id + "' is both a place and a transition");
    if (!t.label.is_silent()) {
      if (t.label.text().empty())
        out.push_back("transition '" + t.id + "' has an empty activity label");
      else if (is_reserved_label(t.label.text()))
        out.push_back("transition '" + t.id + "' uses reserved label '" + std::string(t.label.text()) + "'");
    }
  }
  auto kind = [&](const std::string& n) -> int {
    if (places.contains(n)) return 1;
    if (transitions.contains(n)) return 2;
    return 0;
  };
  for (const auto& a : def.arcs) {
    int s = kind(a.source), t = kind(a.target);
    if (s == 0) out.push_back("arc endpoint '" + a.source + "' is not a declared node");
    if (t == 0) out.push_back("arc endpoint '" + a.target + "' is not a declared node");
    if (s != 0 && s == t)
      out.push_back("arc " + a.source + "->" + a.target + " connects same-kind nodes");
  }
  auto check_marking = [&](const NetDefinition::NamedMarking& m, const char* what) {
    for (const auto& [p, n] : m) {
      if (!places.contains(p))
        out.push_back(std::string(what) + " marking references unknown place '" + p + "'");
    }
  };
  check_marking(def.initial_marking, "initial");
  check_marking(def.final_marking, "final");
  return out;
}

/// Immutable, validated labeled Petri net with interned identifiers and
/// initial/final markings.
class PetriNet {
 public:
  PetriNet() = default;

  /// Throws ValidationError listing every violation.
  explicit PetriNet(NetDefinition def) {
    if (auto v = validate(def); !v.empty()) throw ValidationError(std::move(v));
    for (std::uint32_t i = 0; i < def.places.size(); ++i)
      place_index_.emplace(def.places[i], PlaceId{i});
    transitions_.reserve(def.transitions.size());
    for (std::uint32_t i = 0; i < def.transitions.size(); ++i) {
      transition_index_.emplace(def.transitions[i].id, TransitionId{i});
      transitions_.push_back({def.transitions[i].id, def.transitions[i].label, {}, {}});
    }
    for (const auto& a : def.arcs) {
      if (auto p = find_place(a.source)) {
        add_arc(transitions_[find_transition(a.target)->value].preset, *p);
      } else {
        add_arc(transitions_[find_transition(a.source)->value].postset, *find_place(a.target));
      }
    }
    for (const auto& [p, n] : def.initial_marking) initial_.add(*find_place(p), n);
    for (const auto& [p, n] : def.final_marking) final_.add(*find_place(p), n);
    places_ = std::move(def.places);
  }

  std::size_t place_count() const { return places_.size(); }
  std::size_t transition_count() const { return transitions_.size(); }

  const std::string& place_name(PlaceId p) const { return places_[p.value]; }
  const std::string& transition_name(TransitionId t) const { return transitions_[t.value].id; }
  const Label& label(TransitionId t) const { return transitions_[t.value].label; }

  /// Input places with arc multiplicities.
  std::span<const Token> preset(TransitionId t) const { return transitions_[t.value].preset; }
  std::span<const Token> postset(TransitionId t) const { return transitions_[t.value].postset; }

  const Marking& initial_marking() const { return initial_; }
  const Marking& final_marking() const { return final_; }

  std::optional<PlaceId> find_place(std::string_view name) const {
    auto it = place_index_.find(std::string(name));
    if (it == place_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<TransitionId> find_transition(std::string_view name) const {
    auto it = transition_index_.find(std::string(name));
    if (it == transition_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Marking from place names; unknown names throw IndexError.
  Marking marking(std::initializer_list<std::string_view> names) const {
    Marking m;
    for (auto n : names) {
      auto p = find_place(n);
      if (!p) throw IndexError("unknown place '" + std::string(n) + "'");
      m.add(*p);
    }
    return m;
  }

  std::string format(const Marking& m) const {
    std::string out = "[";
    bool first = true;
    for (const auto& t : m.tokens()) {
      if (!first) out += ",";
      first = false;
      if (t.count > 1) out += std::to_string(t.count);
      out += place_name(t.place);
    }
    return out + "]";
  }

  /// Name-level view, suitable for serialization.
  NetDefinition definition() const {
    NetDefinition def;
    def.places = places_;
    for (std::uint32_t i = 0; i < transitions_.size(); ++i) {
      const auto& t = transitions_[i];
      def.transitions.push_back({t.id, t.label});
      for (const auto& tok : t.preset)
        for (std::uint32_t k = 0; k < tok.count; ++k) def.arcs.push_back({place_name(tok.place), t.id});
      for (const auto& tok : t.postset)
        for (std::uint32_t k = 0; k < tok.count; ++k) def.arcs.push_back({t.id, place_name(tok.place)});
    }
    for (const auto& t : initial_.tokens()) def.initial_marking.emplace_back(place_name(t.place), t.count);
    for (const auto& t : final_.tokens()) def.final_marking.emplace_back(place_name(t.place), t.count);
    return def;
  }

 private:
  struct TransitionData {
    std::string id;
    Label label;
    std::vector<Token> preset;
    std::vector<Token> postset;
  };

  static void add_arc(std::vector<Token>& tokens, PlaceId p) {
    auto it = std::lower_bound(tokens.begin(), tokens.end(), p,
                               [](const Token& t, PlaceId q) { return t.place < q; });
    if (it != tokens.end() && it->place == p)
      ++it->count;
    else
      tokens.insert(it, Token{p, 1});
  }

  std::vector<std::string> places_;
  std::vector<TransitionData> transitions_;
  std::unordered_map<std::string, PlaceId> place_index_;
  std::unordered_map<std::string, TransitionId> transition_index_;
  Marking initial_;
  Marking final_;
};

inline bool is_enabled(const PetriNet& net, const Marking& m, TransitionId t) {
  for (const auto& tok : net.preset(t))
    if (m.count(tok.place) < tok.count) return false;
  return true;
}

/// Transitions enabled at `m`, in identifier order.
inline std::vector<TransitionId> enabled_transitions(const PetriNet& net, const Marking& m) {
  std::vector<TransitionId> out;
  for (std::uint32_t i = 0; i < net.transition_count(); ++i)
    if (is_enabled(net, m, TransitionId{i})) out.push_back(TransitionId{i});
  return out;
}

inline Marking fire(const PetriNet& net, const Marking& m, TransitionId t) {
  if (t.value >= net.transition_count() || !is_enabled(net, m, t))
    throw NotEnabled("transition '" +
                     (t.value < net.transition_count() ? net.transition_name(t) : std::to_string(t.value)) +
                     "' is not enabled at " + net.format(m));
  Marking out = m;
  for (const auto& tok : net.preset(t)) out.remove(tok.place, tok.count);
  for (const auto& tok : net.postset(t)) out.add(tok.place, tok.count);
  return out;
}

/// Observed activity sequence. Events are never silent.
class Trace {
 public:
  Trace() = default;
  Trace(std::initializer_list<std::string> events) : Trace(std::vector<std::string>(events)) {}
  explicit Trace(std::vector<std::string> events) : events_(std::move(events)) {
    for (const auto& e : events_) {
      if (e.empty()) throw ValidationError({"trace contains an empty event label"});
      if (is_reserved_label(e)) throw ValidationError({"trace event uses reserved label '" + e + "'"});
    }
  }

  /// One event per character, e.g. "ABDCCECCE".
  static Trace from_letters(std::string_view letters) {
    std::vector<std::string> ev;
    for (char c : letters) ev.emplace_back(1, c);
    return Trace(std::move(ev));
  }

  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const std::string& operator[](std::size_t i) const { return events_[i]; }
  std::span<const std::string> events() const { return events_; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<std::string> events_;
};

/// Chain net over trace events [first, first + length). Place i of the net
/// is p'_{first+i}; transition i is t'_{first+i+1}, labeled with event first+i.
class TraceNet {
 public:
  TraceNet(const Trace& trace, std::size_t first, std::size_t last) : first_(first) {
    NetDefinition def;
    for (std::size_t i = first; i <= last; ++i) def.places.push_back(place_name(i));
    for (std::size_t i = first; i < last; ++i) {
      def.transitions.push_back({transition_name(i + 1), Label::activity(trace[i])});
      def.arcs.push_back({place_name(i), transition_name(i + 1)});
      def.arcs.push_back({transition_name(i + 1), place_name(i + 1)});
    }
    def.initial_marking = {{place_name(first), 1}};
    def.final_marking = {{place_name(last), 1}};
    net_ = PetriNet(std::move(def));
  }

  const PetriNet& net() const { return net_; }
  std::size_t first_event() const { return first_; }
  std::size_t length() const { return net_.transition_count(); }
  /// Activity of the i-th transition of the chain (0-based, local).
  std::string_view event(std::size_t i) const { return net_.label(TransitionId{std::uint32_t(i)}).text(); }

  static std::string place_name(std::size_t i) { return "p'" + std::to_string(i); }
  static std::string transition_name(std::size_t i) { return "t'" + std::to_string(i); }

 private:
  std::size_t first_ = 0;
  PetriNet net_;
};

inline TraceNet trace_to_net(const Trace& trace) { return TraceNet(trace, 0, trace.size()); }

/// Chain over events j..k-1 (places p'_j..p'_k). Requires j < k <= |trace|.
inline TraceNet subtrace_model(const Trace& trace, std::size_t j, std::size_t k) {
  if (!(j < k && k <= trace.size()))
    throw IndexError("subtrace bounds [" + std::to_string(j) + "," + std::to_string(k) +
                     ") invalid for trace of length " + std::to_string(trace.size()));
  return TraceNet(trace, j, k);
}

}  // namespace conles

template <>
struct std::hash<conles::Marking> {
  std::size_t operator()(const conles::Marking& m) const { return m.hash(); }
};
