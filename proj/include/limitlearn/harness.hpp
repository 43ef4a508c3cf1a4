#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "limitlearn/learners.hpp"
#include "limitlearn/reductions.hpp"
#include "limitlearn/relations.hpp"

namespace limitlearn {

enum class TrialKind { kLearn, kReduce, kAdversary };

std::string to_string(TrialKind k);
TrialKind parse_trial_kind(std::string_view name);

/// One entry of a suite config. Keys of the JSON form match the field names.
///
/// Learning trials: `horizon` counts input bits, one trial per (target, seed).
/// Reduction trials: `targets` holds exactly two inputs run with seeds[0] and seeds[1]
/// (seeds[0] twice if only one seed is given). A structure target counts `horizon` in
/// elements; a `real:<prefix~period>` target counts it in bits, and `real:<lit>@3,8`
/// flips bits 3 and 8. Adversary trials: one run per seed, `horizon` steps.
struct TrialConfig {
  std::string name = "trial";
  TrialKind kind = TrialKind::kLearn;
  std::vector<std::string> family;
  std::vector<std::string> targets;
  /// "sigma2", "reduction", "constant:<i>", "least-reactive".
  std::string learner = "sigma2";
  /// Operator names applied in order; the first reads the input.
  std::vector<std::string> pipeline;
  /// Witness descriptors for pipelines and the "reduction" learner (one per family member).
  std::vector<std::string> witnesses;
  RelationId relation = RelationId::kE0;
  std::uint64_t horizon = 4096;
  std::vector<std::uint64_t> seeds = {1};
  std::uint64_t window = 200;  // stabilization window K
  std::uint64_t column_budget = 8;
  std::uint64_t search_bound = 64;
  std::optional<std::string> q0;
  BoxVariant variant = BoxVariant::kPredicate;
  std::size_t jmax = kDefaultJmax;
  /// Expected outcome checked by the suite: learn "correct"; reduce "equivalent" or
  /// "separated"; adversary "flips>=N". Empty means record only.
  std::string expect;

  /// Throws Error(kConfig) on violated invariants (horizon >= K >= 1, names resolve, ...).
  void validate() const;
  static TrialConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TraceRow {
  std::string trial;
  std::uint64_t seed = 0;
  std::uint64_t stage = 0;
  std::string value;  // conjecture or emitted bit
  StateSnapshot state;

  nlohmann::json to_json() const;
  static TraceRow from_json(const nlohmann::json& j);
};

/// First line of every trace file.
nlohmann::json trace_header(const TrialConfig& cfg, const std::string& trial_id);

struct StabilizationVerdict {
  std::optional<std::size_t> index;  // stabilized-to(i); empty: not stabilized
  std::uint64_t at_stage = 0;        // first stage of the final constant run
  std::uint64_t window = 0;
  std::uint64_t horizon = 0;

  bool stabilized() const { return index.has_value(); }
  nlohmann::json to_json() const;
};

StabilizationVerdict detect_stabilization(const std::vector<TraceRow>& trace, std::uint64_t window);

/// Builds the learner named by cfg.learner over cfg.family.
Learner make_learner(const TrialConfig& cfg);
/// Folds cfg.pipeline through make_operator.
ContinuousOperator make_pipeline(const TrialConfig& cfg);
WitnessSet make_witnesses(const TrialConfig& cfg);

/// Trace of horizon + 1 rows: the empty prefix, then one row per input bit.
std::vector<TraceRow> run_learning_trial(const TrialConfig& cfg, const std::string& target, std::uint64_t seed);

struct ReductionResult {
  std::vector<TraceRow> traces[2];  // one row per determined output bit
  HorizonVerdict verdict;
};

ReductionResult run_reduction_trial(const TrialConfig& cfg, const std::string& a, const std::string& b,
                                    std::uint64_t seed_a, std::uint64_t seed_b);

/// Input prefix for a reduction target: a seeded structure copy (horizon in elements) or a
/// literal real with optional flips (horizon in bits).
Bits target_prefix(const std::string& target, std::uint64_t seed, std::uint64_t horizon, std::size_t jmax);

struct AdversaryTrial {
  std::vector<TraceRow> trace;  // the start chain, then one row per step
  AdversaryResult result;
};

AdversaryTrial run_adversary_trial(const TrialConfig& cfg, std::uint64_t seed);

/// Worker count: LIMITLEARN_THREADS when set (at least 1), else hardware concurrency.
std::size_t thread_count();
/// Runs task(0..n-1) on up to `threads` workers. Exceptions are rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

struct SuiteOptions {
  std::filesystem::path output_dir;  // traces and report; empty: no files
  bool csv = true;
  std::optional<std::size_t> threads;
};

struct SuiteResult {
  nlohmann::json report;
  int exit_code = 0;  // 0 all checks pass, 1 a check failed
  std::vector<std::string> failures;
};

/// Runs every trial of {"trials": [...], "output_dir": ..., "csv": ...}.
SuiteResult run_suite(const nlohmann::json& config, SuiteOptions options = {});
/// Reads the config file; relative output_dir is resolved against the config's directory.
/// Exit code 2 on IO or config errors.
SuiteResult run_suite(const std::filesystem::path& config_path);

void write_jsonl(const std::filesystem::path& path, const nlohmann::json& header, const std::vector<TraceRow>& rows);

}  // namespace limitlearn
