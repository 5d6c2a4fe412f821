// conles: sliding-window conformance checking from the command line.
//
//   conles check  MODEL LOG [--window-length L] [--candidates N] ...
//   conles oracle MODEL LOG [--timeout s] [--state-cap n] ...
//   conles bench  MODEL LOG --windows 25,50 --candidates 2,3 [--repeat r]
//   conles gen    MODEL --traces n --noise i,d,s --seed s --max-len m
//
// Exit codes: 0 ok, 2 input error, 3 an alignment failed replay or the
// aligner broke an internal invariant.

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "conles/conles.hpp"

namespace fs = std::filesystem;
using namespace conles;

namespace {

constexpr int kInputError = 2;
constexpr int kInvariantFailure = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Final marking sidecar: MODEL.fm next to the model, or the model path with
// its extension replaced by .fm.
std::optional<std::string> find_sidecar(const std::string& model_path) {
  for (fs::path p : {fs::path(model_path + ".fm"), fs::path(model_path).replace_extension(".fm")})
    if (fs::exists(p)) return slurp(p.string());
  return std::nullopt;
}

PetriNet load_model(const std::string& path) {
  const auto sidecar = find_sidecar(path);
  return read_pnml(slurp(path), sidecar ? std::optional<std::string_view>(*sidecar) : std::nullopt);
}

EventLog load_log(const std::string& path, const std::string& format) {
  auto log = read_log(slurp(path), format == "auto" ? log_format_for_path(path) : parse_log_format(format));
  for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";
  return log;
}

std::shared_ptr<const ReachabilityGraph> analyse(const PetriNet& model, std::size_t state_cap) {
  auto graph = build_model_reachability(model, state_cap);
  if (graph->info(graph->root()).dead) throw Infeasible("model final marking is unreachable from its initial marking");
  return graph;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw InputError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::chrono::milliseconds to_ms(double seconds) {
  return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0 + 0.5));
}

std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw InputError(std::string("bad ") + what + " value '" + item + "'");
    }
  }
  if (out.empty()) throw InputError(std::string("empty ") + what + " list");
  return out;
}

NoiseSpec parse_noise(const std::string& s) {
  std::vector<double> v;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw InputError("bad noise value '" + item + "'");
    }
  }
  if (v.size() != 3) throw InputError("--noise expects insert,delete,substitute");
  NoiseSpec n{v[0], v[1], v[2]};
  n.check();
  return n;
}

struct CaseResult {
  std::string text;
  Outcome outcome = Outcome::Ok;
  std::uint64_t unit_cost = 0;
  double wall_ms = 0;
  std::string invariant_error;
};

struct AlignOptions {
  std::string model, log, log_format = "auto", format = "json", output;
  std::size_t window_length = 50, candidates = 3, state_cap = kDefaultStateCap, jobs = 1;
  double timeout = 120;
  bool timing = true;
};

std::string summary_line(const std::vector<CaseResult>& results, OutputFormat format, bool timing) {
  std::size_t ok = 0, counts[4] = {};
  double cost = 0, wall = 0;
  for (const auto& r : results) {
    ++counts[static_cast<int>(r.outcome)];
    wall += r.wall_ms;
    if (r.outcome == Outcome::Ok) {
      ++ok;
      cost += static_cast<double>(r.unit_cost);
    }
  }
  const double mean_cost = ok ? cost / static_cast<double>(ok) : 0;
  const double mean_wall = results.empty() ? 0 : wall / static_cast<double>(results.size());
  if (format == OutputFormat::Tsv) {
    std::string s = "summary\ttraces\t" + std::to_string(results.size()) + "\tok\t" + std::to_string(ok) +
                    "\tmean_unit_cost\t" + detail::fixed(mean_cost, 4);
    if (timing) s += "\tmean_wall_ms\t" + detail::fixed(mean_wall, 3);
    return s + "\n";
  }
  nlohmann::ordered_json j;
  j["traces"] = results.size();
  j["ok"] = counts[0];
  j["timeout"] = counts[1];
  j["statecap"] = counts[2];
  j["error"] = counts[3];
  j["mean_unit_cost"] = mean_cost;
  if (timing) j["mean_wall_ms"] = mean_wall;
  nlohmann::ordered_json line;
  line["summary"] = std::move(j);
  return line.dump() + "\n";
}

// Shared driver for check and oracle: aligns every case, replays each
// result against the model, writes records in log order plus a summary.
template <class Align>
int run_alignments(const AlignOptions& o, const PetriNet& model, const EventLog& log, Align&& align) {
  const auto format = parse_output_format(o.format);
  const WriteOptions wopts{o.timing};
  std::vector<CaseResult> results(log.cases.size());
  parallel_for(log.cases.size(), o.jobs, [&](std::size_t i) {
    const auto& c = log.cases[i];
    auto& out = results[i];
    const auto t0 = Clock::now();
    try {
      AlignmentResult r = align(c.trace);
      out.wall_ms = r.wall_ms;
      out.unit_cost = r.unit_cost;
      if (auto bad = check_alignment(model, c.trace, model.initial_marking(), 0, r.alignment))
        out.invariant_error = "case " + c.id + ": " + *bad;
      else if (r.alignment.model_marking != model.final_marking() || r.alignment.trace_position != c.trace.size())
        out.invariant_error = "case " + c.id + ": alignment does not end in the final product marking";
      out.text = write_alignment(c.id, r, model, format, wopts);
      return;
    } catch (const Timeout& e) {
      out.outcome = Outcome::Timeout;
      out.text = write_failure(c.id, "timeout", e.what(), format);
    } catch (const StateCapExceeded& e) {
      out.outcome = Outcome::StateCap;
      out.text = write_failure(c.id, "statecap", e.what(), format);
    } catch (const std::exception& e) {
      out.outcome = Outcome::Error;
      out.invariant_error = "case " + c.id + ": " + e.what();
      out.text = write_failure(c.id, "error", e.what(), format);
    }
    out.wall_ms = elapsed_ms(t0);
  });

  Output out(o.output);
  int status = 0;
  std::size_t timeouts = 0;
  for (const auto& r : results) {
    out.stream() << r.text;
    if (r.outcome == Outcome::Timeout) ++timeouts;
    if (!r.invariant_error.empty()) {
      std::cerr << "error: " << r.invariant_error << "\n";
      status = kInvariantFailure;
    }
  }
  out.stream() << summary_line(results, format, o.timing);
  if (timeouts) std::cerr << "warning: " << timeouts << " of " << results.size() << " traces timed out\n";
  return status;
}

void add_align_options(CLI::App* cmd, AlignOptions& o) {
  cmd->add_option("model", o.model, "PNML process model")->required();
  cmd->add_option("log", o.log, "event log (xes, csv or lines)")->required();
  cmd->add_option("--log-format", o.log_format, "auto, xes, csv or lines")->capture_default_str();
  cmd->add_option("--timeout", o.timeout, "per-trace timeout in seconds")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--state-cap", o.state_cap, "max search states per trace")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--format", o.format, "json or tsv")->capture_default_str()->check(CLI::IsMember({"json", "tsv"}));
  cmd->add_option("--output,-o", o.output, "output file (default stdout)");
  cmd->add_option("--jobs,-j", o.jobs, "traces aligned in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_flag("!--no-timing", o.timing, "omit wall-clock fields for byte-stable output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding-window alignment-based conformance checking"};
  app.require_subcommand(1);

  AlignOptions check_opts;
  auto* check = app.add_subcommand("check", "align every trace with the sliding-window aligner");
  add_align_options(check, check_opts);
  check->add_option("--window-length,-L", check_opts.window_length, "events per window")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  check->add_option("--candidates,-N", check_opts.candidates, "candidates kept between windows")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  AlignOptions oracle_opts;
  auto* oracle = app.add_subcommand("oracle", "align every trace optimally with A*");
  add_align_options(oracle, oracle_opts);

  std::string bench_model, bench_log, bench_log_format = "auto", bench_windows = "5,10,25,50", bench_candidates = "2,3",
                                      bench_output;
  BenchOptions bench_opts;
  double bench_timeout = 120;
  bool bench_timing = true, bench_no_oracle = false;
  auto* bench = app.add_subcommand("bench", "window sweep against the optimal aligner, as CSV");
  bench->add_option("model", bench_model, "PNML process model")->required();
  bench->add_option("log", bench_log, "event log")->required();
  bench->add_option("--log-format", bench_log_format, "auto, xes, csv or lines")->capture_default_str();
  bench->add_option("--windows", bench_windows, "comma-separated window lengths")->capture_default_str();
  bench->add_option("--candidates", bench_candidates, "comma-separated candidate counts")->capture_default_str();
  bench->add_option("--repeat", bench_opts.repeat, "runs per record; wall_ms is their mean")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench->add_option("--timeout", bench_timeout, "per-trace timeout in seconds")->capture_default_str()->check(CLI::NonNegativeNumber);
  bench->add_option("--state-cap", bench_opts.state_cap, "max search states per trace")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--jobs,-j", bench_opts.jobs, "traces run in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--output,-o", bench_output, "output file (default stdout)");
  bench->add_flag("!--no-timing", bench_timing, "leave wall_ms empty for byte-stable output");
  bench->add_flag("--no-oracle", bench_no_oracle, "skip the optimal aligner");

  std::string gen_model, gen_noise = "0,0,0", gen_output;
  std::size_t gen_traces = 10, gen_max_len = 100, gen_min_len = 0;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen", "generate a synthetic log in lines format");
  gen->add_option("model", gen_model, "PNML process model")->required();
  gen->add_option("--traces,-n", gen_traces, "number of traces")->capture_default_str();
  gen->add_option("--noise", gen_noise, "insert,delete,substitute probabilities")->capture_default_str();
  gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen->add_option("--max-len", gen_max_len, "walk length before heading to the final marking")->capture_default_str();
  gen->add_option("--min-len", gen_min_len, "avoid the final marking before this many events")->capture_default_str();
  gen->add_option("--output,-o", gen_output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  // Input problems surface before any alignment runs, so exit 2 covers them;
  // failures after that point are reported per trace.
  try {
    if (check->parsed() || oracle->parsed()) {
      const bool is_check = check->parsed();
      const AlignOptions& o = is_check ? check_opts : oracle_opts;
      const PetriNet model = load_model(o.model);
      const EventLog log = load_log(o.log, o.log_format);
      auto graph = analyse(model, o.state_cap);
      if (o.timeout == 0) std::cerr << "warning: --timeout 0 leaves no time to align; every trace will time out\n";
      if (is_check) {
        ConlesConfig cfg;
        cfg.window_length = o.window_length;
        cfg.candidates = o.candidates;
        cfg.state_cap = o.state_cap;
        cfg.timeout = to_ms(o.timeout);
        const ConlesAligner aligner(graph, cfg);
        return run_alignments(o, model, log, [&](const Trace& t) { return aligner.align(t); });
      }
      return run_alignments(o, model, log, [&](const Trace& t) {
        const auto t0 = Clock::now();
        SearchStats stats;
        AlignmentResult r;
        r.alignment = optimal_alignment(*graph, t, SearchLimits::within(to_ms(o.timeout), o.state_cap), &stats);
        r.unit_cost = r.alignment.cost.unit;
        r.silent_count = r.alignment.cost.silent;
        r.windows.push_back({{0, t.size()}, 1, 1, stats.expanded, elapsed_ms(t0)});
        r.wall_ms = elapsed_ms(t0);
        return r;
      });
    }

    if (bench->parsed()) {
      const PetriNet model = load_model(bench_model);
      const EventLog log = load_log(bench_log, bench_log_format);
      bench_opts.windows = parse_list(bench_windows, "--windows");
      bench_opts.candidates = parse_list(bench_candidates, "--candidates");
      bench_opts.timeout = to_ms(bench_timeout);
      bench_opts.run_oracle = !bench_no_oracle;
      auto records = run_bench(analyse(model, bench_opts.state_cap), log, bench_opts);
      Output out(bench_output);
      out.stream() << bench_csv(records, bench_timing);
      for (const auto& s : summarize(records)) {
        std::cerr << s.method;
        if (s.method == "conles") std::cerr << " L=" << s.window_length << " N_c=" << s.candidates;
        std::cerr << ": traces=" << s.traces << " ok=" << s.ok << " mean_unit_cost=" << detail::fixed(s.mean_unit_cost, 4);
        if (s.method == "conles" && s.compared)
          std::cerr << " optimal=" << s.optimal << "/" << s.compared
                    << " mean_delta_pct=" << detail::fixed(s.mean_delta_pct, 4);
        if (bench_timing) std::cerr << " mean_wall_ms=" << detail::fixed(s.mean_wall_ms, 3);
        std::cerr << "\n";
      }
      return 0;
    }

    if (gen->parsed()) {
      const PetriNet model = load_model(gen_model);
      const NoiseSpec noise = parse_noise(gen_noise);
      const ReachabilityGraph graph(model);
      EventLog log;
      for (std::size_t i = 0; i < gen_traces; ++i) {
        // Per-trace seeds are spread with the golden-ratio increment so that
        // traces are independent of how many are requested.
        const std::uint64_t seed = gen_seed + 0x9E3779B97F4A7C15ULL * (i + 1);
        log.cases.push_back({std::to_string(i + 1), generate_trace(graph, noise, gen_max_len, seed, gen_min_len), {}});
      }
      Output out(gen_output);
      out.stream() << write_lines(log);
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ValidationError& e) {
    std::cerr << "error: invalid input:";
    for (const auto& v : e.violations()) std::cerr << "\n  " << v;
    std::cerr << "\n";
    return kInputError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const StateCapExceeded& e) {
    std::cerr << "error: model state space: " << e.what() << "\n";
    return kInputError;
  } catch (const GenerationStuck& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInvariantFailure;
  }
  return 0;
}
