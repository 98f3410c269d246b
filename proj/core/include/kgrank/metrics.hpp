#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgrank/datasets.hpp"
#include "kgrank/pipeline.hpp"
#include "kgrank/prompts.hpp"
#include "kgrank/providers.hpp"

namespace kgrank {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    /// f1 is the harmonic mean, or 0 when precision + recall is 0.
    static Prf from(double precision, double recall);
};

/// Lowercased whitespace tokens. No stemming, no stopword removal.
std::vector<std::string> rouge_tokens(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Clipped n-gram overlap; n must be 1 or 2. Empty input gives all zeros.
Prf rouge_n(std::string_view candidate, std::string_view reference, int n);

/// Whole-text LCS: P = LCS/|candidate|, R = LCS/|reference|.
Prf rouge_l(std::string_view candidate, std::string_view reference);

enum class Winner { a, b, tie };

std::string_view to_string(Winner winner);

struct JudgeVerdict {
    Winner winner = Winner::tie;
    std::string rationale;
    std::string criteria_version;
    bool unparsed = false;  ///< a judge reply had no readable verdict
};

inline constexpr std::string_view kCriteriaVersion = "physician-criteria-v1";

struct JudgeOptions {
    CompletionSettings llm;
    /// Ask twice with the answers swapped and only accept agreement.
    bool swap_debias = true;
};

/// Pulls "Verdict: 1|2|tie" from a judge reply. Returns 1, 2, 0 for tie,
/// or -1 when absent.
int parse_judge_reply(std::string_view reply);

/// Pairwise factuality judgement of two answers. Identical answers tie
/// without calling the model.
JudgeVerdict judge_pairwise(std::string_view question, std::string_view answer_a,
                            std::string_view answer_b, Completer& llm,
                            const PromptTemplate& judge_template, const JudgeOptions& options);

enum class Metric { rouge1, rouge2, rouge_l, accuracy };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

struct QuestionScores {
    std::string id;
    std::map<Metric, Prf> prf;  ///< ROUGE metrics
    double accuracy = 0.0;      ///< 1 or 0 when accuracy is requested
};

struct EvalReport {
    std::vector<Metric> metrics;
    std::vector<QuestionScores> rows;  ///< dataset order
    std::map<Metric, Prf> mean_prf;
    double mean_accuracy = 0.0;
};

/// Scores every answer against the best-matching reference (max F1 per
/// metric; accuracy is 1 if any reference matches). Corpus values are plain
/// means of the per-question values. ValidationError lists answer ids that
/// are missing from the dataset or lack references.
EvalReport evaluate_run(std::span<const AnswerRecord> answers, std::span<const QAPair> pairs,
                        std::span<const Metric> metrics);

std::string report_csv(const EvalReport& report);
nlohmann::json report_json(const EvalReport& report);

/// One {"id", "candidate", "references"} object per line, for scorers that
/// run outside this tool.
std::string export_for_external_scorers(std::span<const AnswerRecord> answers,
                                        std::span<const QAPair> pairs);

}  // namespace kgrank
