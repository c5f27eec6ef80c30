// Regenerates the shipped Sudoku corpus. Every puzzle has a unique solution
// as certified by the backtracking oracle; "easy" puzzles fall to naked and
// hidden singles, all others do not.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "twa/sudoku/generator.hpp"
#include "twa/sudoku/oracle.hpp"

namespace fs = std::filesystem;
using namespace twa::sudoku;

namespace {

struct Class {
  std::string name;
  int n;
  int count;
  int min_clues;
  bool easy;
  long node_limit;
};

Puzzle make_one(const Class& c, std::mt19937_64& rng) {
  while (true) {
    const Puzzle solution = random_solution(c.n, rng);
    DigOptions opt;
    opt.min_clues = c.min_clues;
    opt.keep_singles_solvable = c.easy;
    opt.node_limit = c.node_limit;
    const Puzzle p = dig(solution, rng, opt);
    if (c.easy != is_singles_solvable(p)) continue;
    const SolutionCount sc = count_solutions(p, 2);
    if (sc.count != 1) continue;
    return p;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string out = "data/sudoku";
  std::uint64_t seed = 20240601;
  CLI::App app("Generate the Sudoku corpus");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  const Class classes[] = {
      {"9x9_easy", 9, 20, 30, true, 200000},
      {"9x9_hard", 9, 20, 0, false, 200000},
      {"16x16", 16, 10, 120, false, 20000},
      {"25x25", 25, 10, 320, false, 20000},
  };
  fs::create_directories(out);
  std::mt19937_64 rng(seed);
  for (const Class& c : classes) {
    for (int i = 1; i <= c.count; ++i) {
      const Puzzle p = make_one(c, rng);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%02d.txt", c.name.c_str(), i);
      std::ofstream f(fs::path(out) / name);
      f << format_grid(p);
      std::cout << name << " clues=" << p.clue_count() << "\n";
    }
  }
  return 0;
}
