#pragma once

// PNML subset:
//   <pnml><net> [<page>]* with <place>, <transition>, <arc> elements
//   place:       id attribute, optional <initialMarking><text>n</text>
//   transition:  id attribute, label from <name><text>; silent when a
//                <toolspecific activity="$invisible$"/> child is present or
//                the name is missing/empty
//   arc:         source/target attributes, optional <inscription><text>n
//                (multiplicity)
//   final marking: <finalmarkings><marking><place idref="p"><text>n</text>
//                inside <net>, or a sidecar text with one `place=count` per
//                line ('#' starts a comment)

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "conles/detail/text.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"

namespace conles {

namespace detail {

namespace pt = boost::property_tree;

inline std::optional<std::string> child_text(const pt::ptree& node, const char* child) {
  if (auto c = node.get_child_optional(child))
    if (auto t = c->get_optional<std::string>("text")) return trim(*t);
  return std::nullopt;
}

inline void read_pnml_nodes(const pt::ptree& container, NetDefinition& def) {
  for (const auto& [tag, node] : container) {
    if (tag == "page") {
      read_pnml_nodes(node, def);
    } else if (tag == "place") {
      auto id = node.get<std::string>("<xmlattr>.id", "");
      if (id.empty()) throw ParseError("<place> without id attribute");
      def.places.push_back(id);
      if (auto m = child_text(node, "initialMarking")) {
        if (auto n = parse_count(*m, "initialMarking of place '" + id + "'")) def.initial_marking.emplace_back(id, n);
      }
    } else if (tag == "transition") {
      auto id = node.get<std::string>("<xmlattr>.id", "");
      if (id.empty()) throw ParseError("<transition> without id attribute");
      bool invisible = false;
      for (const auto& [ctag, child] : node)
        if (ctag == "toolspecific" && child.get<std::string>("<xmlattr>.activity", "") == "$invisible$") invisible = true;
      auto name = child_text(node, "name");
      if (invisible || !name || name->empty())
        def.transitions.push_back({id, Label::silent()});
      else
        def.transitions.push_back({id, Label::activity(*name)});
    } else if (tag == "arc") {
      auto src = node.get<std::string>("<xmlattr>.source", "");
      auto dst = node.get<std::string>("<xmlattr>.target", "");
      if (src.empty() || dst.empty()) throw ParseError("<arc> without source/target attribute");
      std::uint32_t weight = 1;
      if (auto w = child_text(node, "inscription")) weight = parse_count(*w, "inscription of arc " + src + "->" + dst);
      for (std::uint32_t k = 0; k < weight; ++k) def.arcs.push_back({src, dst});
    }
  }
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Parses a `place=count` final-marking sidecar.
inline NetDefinition::NamedMarking read_final_marking_sidecar(std::string_view text) {
  NetDefinition::NamedMarking out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("final marking line " + std::to_string(lineno) + ": expected place=count");
    out.emplace_back(detail::trim(t.substr(0, eq)),
                     detail::parse_count(t.substr(eq + 1), "final marking line " + std::to_string(lineno)));
  }
  return out;
}

/// Reads a PNML document. The final marking comes from <finalmarkings> when
/// present, else from `sidecar`. Throws ParseError or ValidationError.
inline PetriNet read_pnml(std::string_view xml, std::optional<std::string_view> sidecar = std::nullopt) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("PNML line " + std::to_string(e.line()) + ": " + e.message());
  }
  const pt::ptree* net = nullptr;
  if (auto p = doc.get_child_optional("pnml.net"))
    net = &*p;
  else if (auto n = doc.get_child_optional("net"))
    net = &*n;
  if (!net) throw ParseError("PNML document has no <net> element");

  NetDefinition def;
  detail::read_pnml_nodes(*net, def);
  bool have_final = false;
  if (auto fm = net->get_child_optional("finalmarkings")) {
    if (auto marking = fm->get_child_optional("marking")) {
      have_final = true;
      for (const auto& [tag, place] : *marking) {
        if (tag != "place") continue;
        auto id = place.get<std::string>("<xmlattr>.idref", "");
        if (id.empty()) throw ParseError("final marking <place> without idref");
        auto n = detail::parse_count(place.get<std::string>("text", "1"), "final marking of place '" + id + "'");
        if (n) def.final_marking.emplace_back(id, n);
      }
    }
  }
  if (!have_final) {
    if (!sidecar) throw ParseError("PNML has no <finalmarkings> and no final marking sidecar was given");
    def.final_marking = read_final_marking_sidecar(*sidecar);
  }
  return PetriNet(std::move(def));
}

/// Writes `net` in the subset accepted by read_pnml, final marking included.
inline std::string write_pnml(const PetriNet& net, std::string_view net_id = "net") {
  using detail::xml_escape;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<pnml>\n  <net id=\"" << xml_escape(net_id)
      << "\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">\n";
  out << "    <page id=\"page0\">\n";
  for (std::uint32_t i = 0; i < net.place_count(); ++i) {
    const PlaceId p{i};
    out << "      <place id=\"" << xml_escape(net.place_name(p)) << "\">\n";
    out << "        <name><text>" << xml_escape(net.place_name(p)) << "</text></name>\n";
    if (auto n = net.initial_marking().count(p)) out << "        <initialMarking><text>" << n << "</text></initialMarking>\n";
    out << "      </place>\n";
  }
  for (std::uint32_t i = 0; i < net.transition_count(); ++i) {
    const TransitionId t{i};
    const Label& l = net.label(t);
    out << "      <transition id=\"" << xml_escape(net.transition_name(t)) << "\">\n";
    if (l.is_silent()) {
      out << "        <name><text>" << xml_escape(net.transition_name(t)) << "</text></name>\n";
      out << "        <toolspecific tool=\"ProM\" version=\"6.4\" activity=\"$invisible$\"/>\n";
    } else {
      out << "        <name><text>" << xml_escape(l.text()) << "</text></name>\n";
    }
    out << "      </transition>\n";
  }
  std::size_t arc_no = 0;
  for (std::uint32_t i = 0; i < net.transition_count(); ++i) {
    const TransitionId t{i};
    auto arc = [&](const std::string& src, const std::string& dst, std::uint32_t w) {
      out << "      <arc id=\"a" << arc_no++ << "\" source=\"" << xml_escape(src) << "\" target=\"" << xml_escape(dst) << "\"";
      if (w > 1)
        out << ">\n        <inscription><text>" << w << "</text></inscription>\n      </arc>\n";
      else
        out << "/>\n";
    };
    for (const auto& tok : net.preset(t)) arc(net.place_name(tok.place), net.transition_name(t), tok.count);
    for (const auto& tok : net.postset(t)) arc(net.transition_name(t), net.place_name(tok.place), tok.count);
  }
  out << "    </page>\n";
  out << "    <finalmarkings>\n      <marking>\n";
  for (const auto& tok : net.final_marking().tokens())
    out << "        <place idref=\"" << xml_escape(net.place_name(tok.place)) << "\"><text>" << tok.count
        << "</text></place>\n";
  out << "      </marking>\n    </finalmarkings>\n";
  out << "  </net>\n</pnml>\n";
  return out.str();
}

}  // namespace conles
