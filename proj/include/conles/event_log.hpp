#pragma once

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "conles/detail/text.hpp"
#include "conles/errors.hpp"
#include "conles/petri_net.hpp"

namespace conles {

struct EventLog {
  struct Case {
    std::string id;
    Trace trace;
    /// Trace-level attributes other than the case id, as (key, value).
    std::vector<std::pair<std::string, std::string>> attributes;
  };

  std::vector<Case> cases;
  std::vector<std::string> warnings;
};

enum class LogFormat { Xes, Csv, Lines };

inline LogFormat parse_log_format(std::string_view name) {
  if (name == "xes") return LogFormat::Xes;
  if (name == "csv") return LogFormat::Csv;
  if (name == "lines" || name == "txt") return LogFormat::Lines;
  throw ParseError("unknown log format '" + std::string(name) + "'");
}

/// Format implied by a file name: .xes, .csv, anything else is lines.
inline LogFormat log_format_for_path(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
  };
  if (ends_with(".xes")) return LogFormat::Xes;
  if (ends_with(".csv")) return LogFormat::Csv;
  return LogFormat::Lines;
}

namespace detail {

inline Trace make_trace(std::vector<std::string> events, const std::string& where) {
  try {
    return Trace(std::move(events));
  } catch (const ValidationError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

// One trace per non-blank line, whitespace-separated activities. Lines
// starting with '#' are comments. Case ids are 1-based line ordinals among
// traces.
inline EventLog read_lines_log(std::string_view text) {
  EventLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    std::istringstream words(line);
    std::vector<std::string> events;
    for (std::string w; words >> w;) events.push_back(w);
    log.cases.push_back({std::to_string(log.cases.size() + 1),
                         make_trace(std::move(events), "line " + std::to_string(lineno)), {}});
  }
  return log;
}

inline std::vector<std::string> split_csv_row(const std::string& line, int lineno) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("csv line " + std::to_string(lineno) + ": unterminated quote");
  return fields;
}

// Rows of case_id,activity; an optional header row whose first field
// mentions "case" is skipped. Events are grouped by case in file order.
inline EventLog read_csv_log(std::string_view text) {
  EventLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::string>> events;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_csv_row(line, lineno);
    if (lineno == 1 && fields[0].find("case") != std::string::npos) continue;
    if (fields.size() < 2) throw ParseError("csv line " + std::to_string(lineno) + ": expected case_id,activity");
    const std::string id = trim(fields[0]);
    const std::string activity = trim(fields[1]);
    if (id.empty() || activity.empty())
      throw ParseError("csv line " + std::to_string(lineno) + ": empty case id or activity");
    auto [it, inserted] = index.emplace(id, events.size());
    if (inserted) {
      events.emplace_back();
      log.cases.push_back({id, {}, {}});
    }
    events[it->second].push_back(activity);
  }
  for (std::size_t i = 0; i < log.cases.size(); ++i)
    log.cases[i].trace = make_trace(std::move(events[i]), "case '" + log.cases[i].id + "'");
  return log;
}

inline bool is_xes_attribute(const std::string& tag) {
  return tag == "string" || tag == "int" || tag == "float" || tag == "date" || tag == "boolean" || tag == "id";
}

// XES subset: log/trace/event with concept:name. The event concept:name must
// be a <string> attribute.
inline EventLog read_xes_log(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("XES line " + std::to_string(e.line()) + ": " + e.message());
  }
  auto root = doc.get_child_optional("log");
  if (!root) throw ParseError("XES document has no <log> element");
  EventLog log;
  std::unordered_set<std::string> ids;
  for (const auto& [tag, trace] : *root) {
    if (tag != "trace") continue;
    EventLog::Case c;
    std::vector<std::string> events;
    for (const auto& [ttag, child] : trace) {
      if (ttag == "event") {
        std::optional<std::string> name;
        for (const auto& [etag, attr] : child) {
          if (attr.get<std::string>("<xmlattr>.key", "") != "concept:name") continue;
          if (etag != "string")
            throw ParseError("event " + std::to_string(events.size() + 1) + " of trace " +
                             std::to_string(log.cases.size() + 1) + ": concept:name must be a string attribute, got <" +
                             etag + ">");
          name = attr.get<std::string>("<xmlattr>.value", "");
        }
        if (!name || name->empty())
          throw ParseError("event " + std::to_string(events.size() + 1) + " of trace " +
                           std::to_string(log.cases.size() + 1) + " has no concept:name");
        events.push_back(*name);
      } else if (is_xes_attribute(ttag)) {
        auto key = child.get<std::string>("<xmlattr>.key", "");
        auto value = child.get<std::string>("<xmlattr>.value", "");
        if (key == "concept:name")
          c.id = value;
        else
          c.attributes.emplace_back(key, value);
      }
    }
    if (c.id.empty()) c.id = std::to_string(log.cases.size() + 1);
    if (!ids.insert(c.id).second) throw ParseError("duplicate case id '" + c.id + "'");
    c.trace = make_trace(std::move(events), "case '" + c.id + "'");
    log.cases.push_back(std::move(c));
  }
  return log;
}

}  // namespace detail

/// Throws ParseError. An empty log is not an error; it adds a warning.
inline EventLog read_log(std::string_view text, LogFormat format) {
  EventLog log;
  switch (format) {
    case LogFormat::Xes: log = detail::read_xes_log(text); break;
    case LogFormat::Csv: log = detail::read_csv_log(text); break;
    case LogFormat::Lines: log = detail::read_lines_log(text); break;
  }
  if (log.cases.empty()) log.warnings.push_back("event log contains no traces");
  return log;
}

inline std::string write_lines(const EventLog& log) {
  std::string out;
  for (const auto& c : log.cases) {
    bool first = true;
    for (const auto& e : c.trace) {
      if (!first) out += ' ';
      first = false;
      out += e;
    }
    out += '\n';
  }
  return out;
}

}  // namespace conles
