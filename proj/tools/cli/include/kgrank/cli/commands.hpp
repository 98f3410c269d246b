#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kgrank/cli/run_config.hpp"
#include "kgrank/metrics.hpp"

namespace kgrank::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInput = 2;

/// Answers every dataset row into <out>/<run_id>/answers/<id>.json and
/// echoes the effective config to <out>/<run_id>/config.json.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

struct EvalOptions {
    std::filesystem::path run_dir;
    std::filesystem::path dataset;  ///< empty: the dataset named in the run's config.json
    std::string field;
    std::vector<Metric> metrics{Metric::rouge1, Metric::rouge2, Metric::rouge_l};
};

/// Writes report.csv, report.json and export_for_external_scorers.jsonl
/// into the run directory.
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

struct StatsOptions {
    std::filesystem::path dataset;
    std::string field;
    std::filesystem::path json_out;  ///< empty: JSON goes to stdout after the table
};

int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err);

struct CacheOptions {
    std::string action;  ///< inspect | clear
    std::filesystem::path cache_dir;
    std::filesystem::path cassettes;
    std::string source;  ///< clear only this source when set
};

int cmd_cache(const CacheOptions& options, std::ostream& out, std::ostream& err);

struct JudgeCommandOptions {
    std::filesystem::path baseline_run;
    std::filesystem::path candidate_run;
    std::filesystem::path out_file;  ///< empty: <candidate_run>/judge.json
    bool swap_debias = true;
};

/// Pairwise LLM judgement of two runs over their shared question ids.
/// `config` supplies the LLM endpoint, mode and cassettes.
int cmd_judge(const JudgeCommandOptions& options, const RunConfig& config, std::ostream& out,
              std::ostream& err);

/// Loads every answers/*.json of a run, sorted by file name.
std::vector<AnswerRecord> load_run_answers(const std::filesystem::path& run_dir);

}  // namespace kgrank::cli
