#ifndef TWA_CLI_HPP
#define TWA_CLI_HPP

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twa/packing/run.hpp"
#include "twa/steer/service.hpp"
#include "twa/sudoku/solver.hpp"
#include "twa/telemetry.hpp"

namespace twa::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kUnsolved = 2, kInconsistent = 3 };

/// Default for --threads: TWA_THREADS if set to a positive integer, else 1.
inline std::size_t default_threads() {
  if (const char* env = std::getenv("TWA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

namespace detail {

/// Runs CLI11 over `args` (without the program/subcommand name). Returns an
/// exit code when parsing ends the command (help or usage error).
inline std::optional<int> parse(CLI::App& app, std::vector<std::string> args, std::ostream& out,
                                std::ostream& err) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }
  return std::nullopt;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline telemetry::Record grid_record(const sudoku::Puzzle& p) {
  telemetry::Record rows = telemetry::Record::array();
  for (int r = 0; r < p.n(); ++r) {
    telemetry::Record row = telemetry::Record::array();
    for (int c = 0; c < p.n(); ++c) row.push_back(p.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Summary fields one per line, as "key=value".
inline void write_summary_lines(std::ostream& out, const telemetry::Record& r) {
  for (auto it = r.begin(); it != r.end(); ++it) {
    telemetry::Record one;
    one[it.key()] = it.value();
    out << telemetry::to_text(one) << '\n';
  }
}

inline std::atomic<bool>& interrupted() {
  static std::atomic<bool> flag{false};
  return flag;
}

extern "C" inline void on_signal(int) { interrupted() = true; }

}  // namespace detail

// ---------------------------------------------------------------------------
// sudoku

struct SudokuArgs {
  std::string file;
  std::string dynamics = "on";
  std::size_t threads = default_threads();
  long max_iters = 10000;
  double epsilon = 1e-5;
  std::string report = "text";
  std::uint64_t seed = 0;
};

/// Solves one puzzle file. Exit 0 solved, 2 unsolved, 3 inconsistent, 1 usage.
inline int cmd_sudoku(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  SudokuArgs a;
  CLI::App app("Solve an NxN Sudoku with the three-weight engine", "twa sudoku");
  app.add_option("--file", a.file, "puzzle file")->required();
  app.add_option("--dynamics", a.dynamics, "graph dynamics")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--threads", a.threads, "worker threads (default: TWA_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", a.max_iters, "iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--epsilon", a.epsilon, "convergence threshold")->check(CLI::PositiveNumber);
  app.add_option("--report", a.report, "report format")->check(CLI::IsMember({"text", "json-lines"}));
  app.add_option("--seed", a.seed, "seed for the initial indicator values");
  if (auto code = detail::parse(app, args, out, err)) return *code;

  sudoku::Puzzle puzzle;
  try {
    puzzle = sudoku::parse_puzzle(detail::read_file(a.file));
  } catch (const InvalidPuzzle& e) {
    err << "error: " << e.what() << "\n";
    return kInconsistent;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  const auto fmt = telemetry::parse_format(a.report);
  telemetry::Writer w(out, fmt);
  sudoku::SolveOptions opts;
  opts.dynamics = a.dynamics == "on";
  opts.engine.thread_count = a.threads;
  opts.engine.max_iterations = a.max_iters;
  opts.engine.epsilon_convergence = a.epsilon;
  opts.engine.rng_seed = a.seed;

  telemetry::Record config;
  config["kind"] = "config";
  config["task"] = "sudoku";
  config["file"] = a.file;
  config["n"] = puzzle.n();
  config["clues"] = puzzle.clue_count();
  config["dynamics"] = a.dynamics;
  config["threads"] = a.threads;
  config["max_iters"] = a.max_iters;
  config["epsilon"] = a.epsilon;
  config["seed"] = a.seed;
  w.write(config);

  telemetry::Record summary;
  summary["kind"] = "summary";
  int code = kOk;
  std::optional<sudoku::Solution> sol;
  long iterations = 0;
  try {
    sol = sudoku::solve(puzzle, opts, [&](const IterationStatus& s) {
      iterations = s.iteration;
      w.write(telemetry::iteration_record(s));
    });
    summary["status"] = "solved";
  } catch (const Unsolved& e) {
    summary["status"] = "unsolved";
    summary["message"] = e.what();
    code = kUnsolved;
  } catch (const Inconsistent& e) {
    summary["status"] = "inconsistent";
    summary["message"] = e.what();
    code = kInconsistent;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  if (sol) {
    const auto& st = sol->stats;
    summary["iterations"] = st.iterations;
    summary["final_factors"] = st.final_factors;
    summary["final_variables"] = st.final_variables;
    summary["final_graph_size"] = st.final_graph_size;
    summary["initial_graph_size"] = st.initial_graph_size;
    summary["propagation_iterations"] = st.propagation_iterations;
    summary["numeric_iterations"] = st.numeric_iterations;
    summary["threads"] = a.threads;
    summary["timing_ms_per_iter"] = st.ms_per_iter;
    summary["timing_solve_ms"] = st.solve_ms;
  } else {
    summary["iterations"] = iterations;
    summary["threads"] = a.threads;
  }

  if (fmt == telemetry::Format::JsonLines) {
    if (sol) summary["grid"] = detail::grid_record(sol->grid);
    w.write(summary);
  } else {
    if (sol) out << sudoku::format_grid(sol->grid);
    detail::write_summary_lines(out, summary);
  }
  return code;
}

// ---------------------------------------------------------------------------
// pack

struct PackArgs {
  std::size_t circles = 0;
  std::optional<double> radius;
  std::optional<double> density;
  double buffer = 0.05;
  std::size_t threads = default_threads();
  long max_iters = 20000;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string report = "text";
  bool serve = false;
  int port = 7870;
  std::string host = "127.0.0.1";
  long snapshot_every = 1;
  bool quiet = false;
};

/// Packs congruent circles into the unit square. Exit 0 feasible, 2 not
/// converged within --max-iters, 3 infeasible radius, 1 usage.
inline int cmd_pack(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  PackArgs a;
  CLI::App app("Pack congruent circles in the unit square", "twa pack");
  app.add_option("--circles", a.circles, "number of circles")->required()->check(CLI::PositiveNumber);
  auto* r_opt = app.add_option("--radius", a.radius, "circle radius");
  auto* d_opt = app.add_option("--density", a.density, "target density; radius is derived");
  r_opt->excludes(d_opt);
  app.add_option("--buffer", a.buffer, "r-tree neighborhood buffer, fraction of the diameter");
  app.add_option("--threads", a.threads, "worker threads (default: TWA_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", a.max_iters, "iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--seed", a.seed, "seed for the initial positions");
  app.add_option("--out", a.out_path, "write the packing file here");
  app.add_option("--report", a.report, "report format")->check(CLI::IsMember({"text", "json-lines"}));
  app.add_flag("--quiet", a.quiet, "omit per-iteration telemetry");
  app.add_flag("--serve", a.serve, "hand the live run to the steering service");
  app.add_option("--port", a.port, "steering service port")->check(CLI::Range(0, 65535));
  app.add_option("--host", a.host, "steering service bind address");
  app.add_option("--snapshot-every", a.snapshot_every, "snapshot period in iterations")->check(CLI::PositiveNumber);
  if (auto code = detail::parse(app, args, out, err)) return *code;
  if (!a.radius && !a.density) {
    err << "error: one of --radius or --density is required\n";
    return kUsage;
  }

  packing::PackOptions opts;
  opts.instance.n_circles = a.circles;
  opts.instance.buffer_fraction = a.buffer;
  opts.engine.thread_count = a.threads;
  opts.engine.max_iterations = a.max_iters;
  opts.engine.rng_seed = a.seed;
  std::unique_ptr<packing::PackingRun> run;
  try {
    opts.instance.radius = a.radius ? *a.radius : packing::radius_for_density(a.circles, *a.density);
    opts.instance.validate();
    run = std::make_unique<packing::PackingRun>(opts);
  } catch (const InfeasibleRadius& e) {
    err << "error: " << e.what() << "\n";
    return kInconsistent;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  const auto fmt = telemetry::parse_format(a.report);
  telemetry::Writer w(out, fmt);
  telemetry::Record config;
  config["kind"] = "config";
  config["task"] = "pack";
  config["circles"] = a.circles;
  config["radius"] = opts.instance.radius;
  config["density"] = opts.instance.density();
  config["buffer"] = a.buffer;
  config["threads"] = a.threads;
  config["max_iters"] = a.max_iters;
  config["seed"] = a.seed;
  w.write(config);

  auto observe = [&](const packing::PackStatus& s) {
    if (!a.quiet) w.write(telemetry::packing_record(s));
  };
  const auto t0 = std::chrono::steady_clock::now();
  packing::PackStatus last;
  try {
    if (a.serve) {
      steer::ServiceOptions so;
      so.host = a.host;
      so.port = a.port;
      so.snapshot_every = a.snapshot_every;
      steer::SteerService service(*run, so);
      service.start();
      err << "steering service listening on " << a.host << ":" << service.port() << "\n";
      detail::interrupted() = false;
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      service.serve(detail::interrupted(), observe);
      service.stop();
      last = run->last();
    } else {
      last = run->run(observe);
    }
  } catch (const PortInUse& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInconsistent;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto centers = run->centers();
  const auto feas = packing::check_feasibility(centers, run->radius());
  if (!a.out_path.empty()) {
    std::ofstream f(a.out_path);
    if (!f) {
      err << "error: cannot write '" << a.out_path << "'\n";
      return kUsage;
    }
    packing::write_packing(f, centers, run->radius());
  }

  telemetry::Record summary;
  summary["kind"] = "summary";
  summary["status"] = last.done ? "feasible" : "unconverged";
  summary["iterations"] = run->iteration();
  summary["max_overlap"] = feas.max_overlap;
  summary["max_box_excess"] = feas.max_box_excess;
  summary["density"] = opts.instance.density();
  summary["active_factors"] = last.active_factors;
  summary["pool_size"] = last.pool_size;
  summary["peak_active"] = run->maintenance().peak_active();
  summary["threads"] = a.threads;
  summary["timing_solve_s"] = seconds;
  summary["timing_ms_per_iter"] = run->iteration() ? seconds * 1000.0 / static_cast<double>(run->iteration()) : 0.0;
  if (fmt == telemetry::Format::JsonLines) {
    w.write(summary);
  } else {
    detail::write_summary_lines(out, summary);
  }
  return last.done ? kOk : kUnsolved;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string corpus;
  std::vector<std::size_t> threads{1};
  std::vector<int> sizes;
  long max_iters = 10000;
  double epsilon = 1e-5;
  std::uint64_t seed = 0;
  std::string report = "text";
};

struct BenchRun {
  std::string file;
  int n = 0;
  bool dynamics = true;
  std::size_t threads = 1;
  std::string status;
  long iterations = 0;
  std::size_t final_graph_size = 0;
  double ms_per_iter = 0.0;
  double final_quartile_ms_per_iter = 0.0;
  double solve_s = 0.0;
  double loop_ms = 0.0;
};

inline std::vector<std::filesystem::path> corpus_files(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Paired dynamics-off/on comparison per size class plus a thread sweep.
/// Every (puzzle, threads, dynamics) triple is one run.
inline int cmd_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  BenchArgs a;
  CLI::App app("Benchmark the Sudoku solver with and without graph dynamics", "twa bench");
  app.add_option("--corpus", a.corpus, "directory of puzzle files (*.txt)")->required()->check(CLI::ExistingDirectory);
  app.add_option("--threads", a.threads, "thread counts to sweep")->delimiter(',');
  app.add_option("--sizes", a.sizes, "only puzzles of these sizes")->delimiter(',');
  app.add_option("--max-iters", a.max_iters, "iteration cap per run")->check(CLI::PositiveNumber);
  app.add_option("--epsilon", a.epsilon, "convergence threshold")->check(CLI::PositiveNumber);
  app.add_option("--seed", a.seed, "seed for the initial indicator values");
  app.add_option("--report", a.report, "report format")->check(CLI::IsMember({"text", "json-lines"}));
  if (auto code = detail::parse(app, args, out, err)) return *code;
  if (a.threads.empty() || std::any_of(a.threads.begin(), a.threads.end(), [](std::size_t t) { return t == 0; })) {
    err << "error: --threads needs positive counts\n";
    return kUsage;
  }

  const auto fmt = telemetry::parse_format(a.report);
  telemetry::Writer w(out, fmt);
  std::vector<BenchRun> runs;
  for (const auto& path : corpus_files(a.corpus)) {
    sudoku::Puzzle p;
    try {
      p = sudoku::parse_puzzle(detail::read_file(path.string()));
    } catch (const std::exception& e) {
      err << "skipping " << path.string() << ": " << e.what() << "\n";
      continue;
    }
    if (!a.sizes.empty() && std::find(a.sizes.begin(), a.sizes.end(), p.n()) == a.sizes.end()) continue;
    for (std::size_t t : a.threads) {
      for (bool dyn : {false, true}) {
        BenchRun r;
        r.file = path.filename().string();
        r.n = p.n();
        r.dynamics = dyn;
        r.threads = t;
        sudoku::SolveOptions opts;
        opts.dynamics = dyn;
        opts.engine.thread_count = t;
        opts.engine.max_iterations = a.max_iters;
        opts.engine.epsilon_convergence = a.epsilon;
        opts.engine.rng_seed = a.seed;
        std::vector<double> us;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const auto sol = sudoku::solve(p, opts, [&](const IterationStatus& s) { us.push_back(s.timing.total_us()); });
          r.status = "solved";
          r.iterations = sol.stats.iterations;
          r.final_graph_size = sol.stats.final_graph_size;
          r.ms_per_iter = sol.stats.ms_per_iter;
          r.final_quartile_ms_per_iter = sol.stats.final_quartile_ms_per_iter();
        } catch (const Unsolved&) {
          r.status = "unsolved";
        } catch (const Error& e) {
          r.status = std::string("error: ") + e.what();
        }
        r.solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (double x : us) r.loop_ms += x / 1000.0;
        if (r.status != "solved") r.iterations = static_cast<long>(us.size());

        telemetry::Record rec;
        rec["kind"] = "run";
        rec["file"] = r.file;
        rec["n"] = r.n;
        rec["dynamics"] = dyn ? "on" : "off";
        rec["threads"] = t;
        rec["status"] = r.status;
        rec["iterations"] = r.iterations;
        rec["final_graph_size"] = r.final_graph_size;
        rec["timing_ms_per_iter"] = r.ms_per_iter;
        rec["timing_final_quartile_ms_per_iter"] = r.final_quartile_ms_per_iter;
        rec["timing_solve_s"] = r.solve_s;
        if (fmt == telemetry::Format::JsonLines) w.write(rec);
        runs.push_back(std::move(r));
      }
    }
  }

  // Table: size class x dynamics at the first thread count.
  const std::size_t base_threads = a.threads.front();
  std::map<int, std::array<std::vector<const BenchRun*>, 2>> classes;
  for (const BenchRun& r : runs) {
    if (r.threads == base_threads) classes[r.n][r.dynamics ? 1 : 0].push_back(&r);
  }
  auto mean = [](const std::vector<const BenchRun*>& v, auto field) {
    double s = 0.0;
    std::size_t k = 0;
    for (const BenchRun* r : v) {
      if (r->status != "solved") continue;
      s += field(*r);
      ++k;
    }
    return k ? s / static_cast<double>(k) : 0.0;
  };
  std::ostringstream table;
  if (fmt == telemetry::Format::Text) {
    table << "size  dynamics  puzzles  solved  avg_final_graph_size  avg_iterations  ms_per_iter  solve_s\n";
  }
  for (const auto& [n, pair] : classes) {
    for (int d = 0; d < 2; ++d) {
      const auto& v = pair[static_cast<std::size_t>(d)];
      const auto solved = std::count_if(v.begin(), v.end(), [](const BenchRun* r) { return r->status == "solved"; });
      const double fgs = mean(v, [](const BenchRun& r) { return static_cast<double>(r.final_graph_size); });
      const double its = mean(v, [](const BenchRun& r) { return static_cast<double>(r.iterations); });
      const double mpi = mean(v, [](const BenchRun& r) { return r.ms_per_iter; });
      const double sec = mean(v, [](const BenchRun& r) { return r.solve_s; });
      if (fmt == telemetry::Format::JsonLines) {
        telemetry::Record row;
        row["kind"] = "table_row";
        row["n"] = n;
        row["dynamics"] = d ? "on" : "off";
        row["threads"] = base_threads;
        row["puzzles"] = v.size();
        row["solved"] = solved;
        row["avg_final_graph_size"] = fgs;
        row["avg_iterations"] = its;
        row["timing_ms_per_iter"] = mpi;
        row["timing_solve_s"] = sec;
        w.write(row);
      } else {
        table << std::left << std::setw(6) << (std::to_string(n) + "x" + std::to_string(n)) << std::setw(10)
              << (d ? "on" : "off") << std::setw(9) << v.size() << std::setw(8) << solved << std::setw(22)
              << std::fixed << std::setprecision(1) << fgs << std::setw(16) << its << std::setw(13)
              << std::setprecision(3) << mpi << std::setprecision(3) << sec << "\n";
        table.unsetf(std::ios::floatfield);
      }
    }
  }

  // Thread sweep: iteration throughput per size class and dynamics setting.
  if (fmt == telemetry::Format::Text) table << "\nsize  dynamics  threads  iter_per_s  speedup\n";
  std::map<std::tuple<int, bool, std::size_t>, std::pair<double, double>> sweep;  // iterations, ms
  for (const BenchRun& r : runs) {
    auto& acc = sweep[{r.n, r.dynamics, r.threads}];
    acc.first += static_cast<double>(r.iterations);
    acc.second += r.loop_ms;
  }
  for (const auto& [key, acc] : sweep) {
    const auto [n, dyn, t] = key;
    const double tput = acc.second > 0.0 ? acc.first / (acc.second / 1000.0) : 0.0;
    const auto base = sweep.find({n, dyn, base_threads});
    const double base_tput =
        base != sweep.end() && base->second.second > 0.0 ? base->second.first / (base->second.second / 1000.0) : 0.0;
    const double speedup = base_tput > 0.0 ? tput / base_tput : 0.0;
    if (fmt == telemetry::Format::JsonLines) {
      telemetry::Record row;
      row["kind"] = "scaling_row";
      row["n"] = n;
      row["dynamics"] = dyn ? "on" : "off";
      row["threads"] = t;
      row["timing_iter_per_s"] = tput;
      row["timing_speedup"] = speedup;
      w.write(row);
    } else {
      table << std::left << std::setw(6) << (std::to_string(n) + "x" + std::to_string(n)) << std::setw(10)
            << (dyn ? "on" : "off") << std::setw(9) << t << std::setw(12) << std::fixed << std::setprecision(1)
            << tput << std::setprecision(2) << speedup << "\n";
      table.unsetf(std::ios::floatfield);
    }
  }
  if (fmt == telemetry::Format::Text) out << table.str();
  return kOk;
}

inline void usage(std::ostream& os) {
  os << "usage: twa <command> [options]\n"
        "commands:\n"
        "  sudoku   solve a puzzle file\n"
        "  pack     pack circles in the unit square (--serve for live steering)\n"
        "  bench    dynamics on/off comparison and thread sweep over a corpus\n"
        "run 'twa <command> --help' for options\n";
}

/// Dispatches on argv[1].
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (argc < 2) {
    usage(err);
    return kUsage;
  }
  const std::string cmd = argv[1];
  std::vector<std::string> rest(argv + 2, argv + argc);
  if (cmd == "sudoku") return cmd_sudoku(rest, out, err);
  if (cmd == "pack") return cmd_pack(rest, out, err);
  if (cmd == "bench") return cmd_bench(rest, out, err);
  if (cmd == "-h" || cmd == "--help") {
    usage(out);
    return kOk;
  }
  err << "unknown command '" << cmd << "'\n";
  usage(err);
  return kUsage;
}

}  // namespace twa::cli

#endif  // TWA_CLI_HPP
