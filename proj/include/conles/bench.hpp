#pragma once

// Benchmark records and the per-trace runners shared by the CLI and the
// acceptance checks.
//
// CSV schema (header row included, one row per record):
//   case,trace_length,method,L,N_c,unit_cost,oracle_unit_cost,delta_cost_pct,wall_ms,nodes_expanded,outcome
// method is conles or oracle; L and N_c are empty for oracle rows.
// unit_cost is empty unless outcome is ok; oracle_unit_cost and
// delta_cost_pct are empty unless both runs are ok. delta_cost_pct is
// (cost - oracle) / max(oracle, 1) * 100. wall_ms is empty when timing is off.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "conles/engine.hpp"
#include "conles/errors.hpp"
#include "conles/event_log.hpp"
#include "conles/reach_analysis.hpp"
#include "conles/search.hpp"

namespace conles {

enum class Outcome { Ok, Timeout, StateCap, Error };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Ok: return "ok";
    case Outcome::Timeout: return "timeout";
    case Outcome::StateCap: return "statecap";
    case Outcome::Error: return "error";
  }
  return "error";
}

struct BenchRecord {
  std::string case_id;
  std::size_t trace_length = 0;
  std::string method;  // "conles" or "oracle"
  std::size_t window_length = 0;
  std::size_t candidates = 0;
  std::optional<std::uint64_t> unit_cost;
  std::optional<std::uint64_t> oracle_unit_cost;
  double wall_ms = 0;
  std::size_t nodes_expanded = 0;
  Outcome outcome = Outcome::Ok;
  std::string error;

  std::optional<double> delta_cost_pct() const {
    if (!unit_cost || !oracle_unit_cost) return std::nullopt;
    const double o = static_cast<double>(*oracle_unit_cost);
    return (static_cast<double>(*unit_cost) - o) / std::max(o, 1.0) * 100.0;
  }
};

/// Runs `f` and records cost or failure. Timeouts and state-cap hits are
/// outcomes, not errors; anything else from the conles library becomes
/// outcome=error.
template <class F>
BenchRecord run_recorded(BenchRecord rec, F&& f) {
  const auto t0 = Clock::now();
  try {
    std::tie(rec.unit_cost, rec.nodes_expanded) = f();
    rec.outcome = Outcome::Ok;
  } catch (const Timeout& e) {
    rec.outcome = Outcome::Timeout;
    rec.error = e.what();
  } catch (const StateCapExceeded& e) {
    rec.outcome = Outcome::StateCap;
    rec.error = e.what();
  } catch (const Error& e) {
    rec.outcome = Outcome::Error;
    rec.error = e.what();
  }
  rec.wall_ms = elapsed_ms(t0);
  return rec;
}

inline BenchRecord run_conles(const ConlesAligner& aligner, const std::string& case_id, const Trace& trace) {
  BenchRecord rec;
  rec.case_id = case_id;
  rec.trace_length = trace.size();
  rec.method = "conles";
  rec.window_length = aligner.config().window_length;
  rec.candidates = aligner.config().candidates;
  return run_recorded(std::move(rec), [&] {
    auto r = aligner.align(trace);
    return std::make_pair(std::optional<std::uint64_t>(r.unit_cost), r.nodes_expanded());
  });
}

inline BenchRecord run_oracle(const ReachabilityGraph& graph, const std::string& case_id, const Trace& trace,
                              std::chrono::milliseconds timeout, std::size_t state_cap) {
  BenchRecord rec;
  rec.case_id = case_id;
  rec.trace_length = trace.size();
  rec.method = "oracle";
  SearchStats stats;
  rec = run_recorded(std::move(rec), [&] {
    auto a = optimal_alignment(graph, trace, SearchLimits::within(timeout, state_cap), &stats);
    return std::make_pair(std::optional<std::uint64_t>(a.cost.unit), stats.expanded);
  });
  if (rec.outcome != Outcome::Ok) rec.nodes_expanded = stats.expanded;
  return rec;
}

/// Calls f(i) for i in [0, n) on up to `jobs` threads. f must not throw.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
    });
}

struct BenchOptions {
  std::vector<std::size_t> windows{5, 10, 25, 50};
  std::vector<std::size_t> candidates{2, 3};
  std::size_t repeat = 1;
  std::chrono::milliseconds timeout{120'000};
  std::size_t state_cap = kDefaultStateCap;
  std::size_t jobs = 1;
  bool run_oracle = true;
};

/// Oracle once per trace, then conles for every (L, N_c). Records come out
/// grouped by case in log order, oracle first, then by L and N_c. With
/// repeat > 1, wall_ms is the mean over the runs; costs are deterministic.
inline std::vector<BenchRecord> run_bench(const std::shared_ptr<const ReachabilityGraph>& graph,
                                          const EventLog& log, const BenchOptions& opts) {
  const std::size_t repeat = std::max<std::size_t>(1, opts.repeat);
  std::vector<std::unique_ptr<ConlesAligner>> aligners;
  for (std::size_t L : opts.windows)
    for (std::size_t nc : opts.candidates) {
      ConlesConfig cfg;
      cfg.window_length = L;
      cfg.candidates = nc;
      cfg.timeout = opts.timeout;
      cfg.state_cap = opts.state_cap;
      aligners.push_back(std::make_unique<ConlesAligner>(graph, cfg));
    }

  std::vector<std::vector<BenchRecord>> per_case(log.cases.size());
  parallel_for(log.cases.size(), opts.jobs, [&](std::size_t i) {
    const auto& c = log.cases[i];
    auto repeated = [&](auto&& run) {
      BenchRecord first = run();
      double total = first.wall_ms;
      for (std::size_t r = 1; r < repeat; ++r) total += run().wall_ms;
      first.wall_ms = total / static_cast<double>(repeat);
      return first;
    };
    std::optional<std::uint64_t> oracle;
    if (opts.run_oracle) {
      auto rec = repeated([&] { return run_oracle(*graph, c.id, c.trace, opts.timeout, opts.state_cap); });
      oracle = rec.unit_cost;
      rec.oracle_unit_cost = oracle;
      per_case[i].push_back(std::move(rec));
    }
    for (const auto& a : aligners) {
      auto rec = repeated([&] { return run_conles(*a, c.id, c.trace); });
      if (rec.unit_cost) rec.oracle_unit_cost = oracle;
      per_case[i].push_back(std::move(rec));
    }
  });
  std::vector<BenchRecord> out;
  for (auto& v : per_case)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

inline std::string bench_csv_header() {
  return "case,trace_length,method,L,N_c,unit_cost,oracle_unit_cost,delta_cost_pct,wall_ms,nodes_expanded,outcome\n";
}

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

inline std::string bench_csv_row(const BenchRecord& r, bool timing = true) {
  const bool conles = r.method == "conles";
  std::string row = detail::csv_field(r.case_id) + "," + std::to_string(r.trace_length) + "," + r.method + ",";
  row += (conles ? std::to_string(r.window_length) : "") + ",";
  row += (conles ? std::to_string(r.candidates) : "") + ",";
  row += (r.unit_cost ? std::to_string(*r.unit_cost) : "") + ",";
  const auto delta = r.delta_cost_pct();
  row += (delta ? std::to_string(*r.oracle_unit_cost) : "") + ",";
  row += (delta ? detail::fixed(*delta, 4) : "") + ",";
  row += (timing ? detail::fixed(r.wall_ms, 3) : "") + ",";
  row += std::to_string(r.nodes_expanded) + "," + std::string(to_string(r.outcome)) + "\n";
  return row;
}

inline std::string bench_csv(const std::vector<BenchRecord>& records, bool timing = true) {
  std::string out = bench_csv_header();
  for (const auto& r : records) out += bench_csv_row(r, timing);
  return out;
}

/// Averages per (method, L, N_c). Each record already holds a per-trace
/// value (mean over repeats); these are averaged across traces. Cost and Δ
/// means use the traces where they are defined.
struct BenchSummary {
  std::string method;
  std::size_t window_length = 0;
  std::size_t candidates = 0;
  std::size_t traces = 0;
  std::size_t ok = 0;
  std::size_t optimal = 0;  // traces with Δ = 0
  std::size_t compared = 0;  // traces with Δ defined
  double mean_unit_cost = 0;
  double mean_delta_pct = 0;
  double mean_wall_ms = 0;
};

inline std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records) {
  std::map<std::tuple<std::string, std::size_t, std::size_t>, BenchSummary> groups;
  for (const auto& r : records) {
    auto& s = groups[{r.method, r.window_length, r.candidates}];
    s.method = r.method;
    s.window_length = r.window_length;
    s.candidates = r.candidates;
    ++s.traces;
    s.mean_wall_ms += r.wall_ms;
    if (r.unit_cost) {
      ++s.ok;
      s.mean_unit_cost += static_cast<double>(*r.unit_cost);
    }
    if (auto d = r.delta_cost_pct()) {
      ++s.compared;
      s.mean_delta_pct += *d;
      if (*d == 0) ++s.optimal;
    }
  }
  std::vector<BenchSummary> out;
  for (auto& [key, s] : groups) {
    s.mean_wall_ms /= static_cast<double>(s.traces);
    if (s.ok) s.mean_unit_cost /= static_cast<double>(s.ok);
    if (s.compared) s.mean_delta_pct /= static_cast<double>(s.compared);
    out.push_back(s);
  }
  return out;
}

}  // namespace conles
