#ifndef NEGDEP_VERIFY_HPP
#define NEGDEP_VERIFY_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace negdep {

enum class Suite { Fast, Full };
Suite suite_from_string(const std::string& s);
const char* to_string(Suite s);

enum class CheckStatus { Pass, Fail, Skip };
const char* to_string(CheckStatus s);

struct CriterionResult {
  int id = 0;
  std::string title;
  CheckStatus status = CheckStatus::Skip;
  std::string detail;  // deterministic given (suite, seed)
  double seconds = 0.0;
};

struct VerifyOptions {
  Suite suite = Suite::Fast;
  std::uint64_t seed = 0;
  /// Directory with kernel fixtures (*.csv plus *.law.csv golden laws); empty skips them.
  std::string fixture_dir;
  /// Restrict to these criterion ids; empty runs all.
  std::vector<int> only;
};

struct VerifyReport {
  VerifyOptions options;
  std::vector<CriterionResult> results;
  double wall_seconds = 0.0;

  bool all_passed() const;  // skipped criteria do not count as failures
};

constexpr int kCriterionCount = 12;
const char* criterion_title(int id);
/// Runtime budget of the full-size criterion in seconds, 0 when none is stated.
double criterion_budget_seconds(int id);

/// Runs one criterion. Full uses the sizes of the acceptance criteria; Fast
/// shrinks sample counts and skips the purely statistical ones (4, 9 and the
/// spike part of 11).
CriterionResult run_criterion(int id, const VerifyOptions& opt);

using ProgressFn = std::function<void(const CriterionResult&)>;
VerifyReport run_verify(const VerifyOptions& opt, const ProgressFn& progress = {});

/// Manifest JSON, schema "negdep-manifest/1". Holds no timings, so equal
/// (suite, seed, version) give byte-identical manifests.
std::string manifest_json(const VerifyReport& report);
/// Wall-clock timings, kept apart from the manifest.
std::string timing_json(const VerifyReport& report);

/// Writes a kernel fixture and its golden law (brute-force enumeration) to dir.
void write_kernel_fixtures(const std::string& dir, std::uint64_t seed);

}  // namespace negdep

#endif
