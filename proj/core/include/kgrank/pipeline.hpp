#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgrank/datasets.hpp"
#include "kgrank/errors.hpp"
#include "kgrank/kg_client.hpp"
#include "kgrank/prompts.hpp"
#include "kgrank/provider_factory.hpp"
#include "kgrank/ranker.hpp"

namespace kgrank {

enum class Strategy { zs, sim, ae, mmr };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

/// Everything that shapes an answer. Serialized verbatim into every
/// AnswerRecord so a run can be reproduced from its records.
struct PipelineConfig {
    Strategy strategy = Strategy::sim;
    bool rerank = false;
    RerankParams selection;  ///< p and p_pre
    double mmr_w_base = 0.1;
    double mmr_delta = 0.01;
    bool mmr_full = false;  ///< order all candidates instead of a p_pre pool
    std::size_t retrieval_cap = 1000;
    KgSource kg_source = KgSource::umls;
    std::string answer_template = "auto";  ///< auto | kg_answer | kg_answer_mintaka
    std::string answer_hint;
    std::string embed_model;
    std::string cross_model;
    CompletionSettings llm;

    void validate() const;
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
};

struct StageTiming {
    std::string stage;
    double millis = 0.0;
};

/// Provenance of one question through the pipeline.
struct AnswerRecord {
    std::string question_id;
    std::string question;
    std::vector<std::string> mentions;
    std::vector<ConceptRef> concepts;
    std::size_t retrieved_count = 0;
    std::vector<RankedTriple> ranked;
    std::vector<RankedTriple> selected;
    std::string expansion;
    std::string prompt;
    std::string answer;
    std::vector<std::string> flags;
    std::vector<std::string> warnings;
    nlohmann::json config_snapshot;
    std::vector<StageTiming> timings;
};

/// Timings vary run to run; they are left out unless asked for so the
/// persisted record stays byte-stable under replay.
nlohmann::json to_json(const AnswerRecord& record, bool include_timings = false);
AnswerRecord answer_record_from_json(const nlohmann::json& j);

/// Pretty-printed, sorted keys, trailing newline.
std::string serialize_record(const AnswerRecord& record);

/// Raised when a stage fails hard. `stage` is one of ner, kg-retrieval,
/// embedding, ranking, rerank, generation.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Parses the NER completion: split on commas, semicolons and newlines,
/// trim, strip list markers and quotes, drop duplicates case-insensitively
/// (first spelling wins). "none" yields an empty list. Segments longer than
/// eight words are treated as prose and dropped; if that leaves nothing a
/// warning is appended.
std::vector<std::string> parse_entity_list(std::string_view completion,
                                           std::vector<std::string>* warnings = nullptr);

std::vector<std::string> extract_entities(std::string_view question, Completer& llm,
                                          const PromptTemplate& ner_template,
                                          const CompletionSettings& settings,
                                          std::vector<std::string>* warnings = nullptr);

/// Renders {question}, {triples} and {answer_hint}. Triples become one
/// "- <textualized>" line each in the given order; an empty list renders
/// "(no external facts retrieved)".
std::string build_prompt(const PromptTemplate& answer_template, std::string_view question,
                         std::span<const RankedTriple> selected, std::string_view answer_hint = {});

inline constexpr std::string_view kNoFactsLine = "(no external facts retrieved)";

/// One configured end-to-end question answerer. answer() is const and may
/// be called from several threads.
class Pipeline {
public:
    Pipeline(PipelineConfig config, ProviderSet providers, std::shared_ptr<KgClient> kg,
             TemplateSet templates);

    AnswerRecord answer(const QAPair& pair) const;

    const PipelineConfig& config() const noexcept { return config_; }

private:
    const PromptTemplate& answer_template_for(const QAPair& pair) const;

    PipelineConfig config_;
    ProviderSet providers_;
    std::shared_ptr<KgClient> kg_;
    TemplateSet templates_;
};

}  // namespace kgrank
