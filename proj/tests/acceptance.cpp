// Runs every acceptance criterion at full size and prints one line per
// criterion, also to the file named by the first argument when given.
// Exit status is 0 regardless of the outcome; the lines carry it.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>

#include "negdep/verify.hpp"

using namespace negdep;

namespace {

std::ofstream results;

void emit(const std::string& line) {
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
  if (results.is_open()) results << line << std::endl;
}

void print(int id, bool pass, double seconds, double budget, const std::string& detail) {
  char head[96];
  std::snprintf(head, sizeof head, "AC%d %s  %.1fs", id, pass ? "PASS" : "FAIL", seconds);
  std::string line = head;
  if (budget > 0) line += " (budget " + std::to_string(static_cast<int>(budget)) + "s)";
  emit(line + "  " + detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) results.open(argv[1], std::ios::trunc);
  VerifyOptions opt;
  opt.suite = Suite::Full;
  opt.seed = 20240601;
  opt.fixture_dir = NEGDEP_TEST_FIXTURES;

  int passed = 0;
  for (int id = 1; id < kCriterionCount; ++id) {
    const CriterionResult r = run_criterion(id, opt);
    const double budget = criterion_budget_seconds(id);
    const bool in_budget = budget <= 0 || r.seconds <= budget;
    const bool ok = r.status == CheckStatus::Pass && in_budget;
    std::string detail = r.title + ": " + r.detail;
    if (!in_budget) detail = "over budget; " + detail;
    print(id, ok, r.seconds, budget, detail);
    passed += ok;
  }

  // Determinism: two fast verify runs with one seed give byte-identical manifests.
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions fast;
  fast.seed = 7;
  fast.fixture_dir = NEGDEP_TEST_FIXTURES;
  const std::string a = manifest_json(run_verify(fast));
  const std::string b = manifest_json(run_verify(fast));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool same = a == b;
  print(12, same, secs, 0,
        std::string(criterion_title(12)) + ": fast-suite manifests " + (same ? "identical" : "differ") + " (" +
            std::to_string(a.size()) + " bytes)");
  passed += same;

  emit(std::to_string(passed) + "/" + std::to_string(kCriterionCount) + " criteria pass");
  return 0;
}
