#include "kgrank/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "kgrank/util.hpp"

namespace kgrank {

using nlohmann::json;

namespace {

constexpr std::size_t kEmbedBatch = 128;
constexpr std::size_t kMaxEntityWords = 8;

std::string strip_list_marker(std::string s) {
    s = trim(s);
    if (!s.empty() && (s[0] == '-' || s[0] == '*')) return trim(s.substr(1));
    std::size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
        return trim(s.substr(digits + 1));
    }
    return s;
}

std::string strip_quotes(std::string s) {
    auto quote = [](char c) { return c == '"' || c == '\'' || c == '`'; };
    while (s.size() >= 2 && quote(s.front()) && s.back() == s.front()) s = trim(s.substr(1, s.size() - 2));
    while (!s.empty() && s.back() == '.') s.pop_back();
    return trim(s);
}

bool is_none_sentinel(std::string_view s) {
    auto lower = to_lower(s);
    return lower == "none" || lower == "n/a" || lower == "no entities";
}

class StageClock {
public:
    StageClock(std::vector<StageTiming>& timings, std::string stage)
        : timings_(timings), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
    ~StageClock() {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        timings_.push_back(
            StageTiming{stage_, std::chrono::duration<double, std::milli>(elapsed).count()});
    }
    StageClock(const StageClock&) = delete;
    StageClock& operator=(const StageClock&) = delete;

private:
    std::vector<StageTiming>& timings_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

/// Runs `fn`, timing it and re-labelling any failure with the stage name.
template <typename Fn>
auto run_stage(std::vector<StageTiming>& timings, const std::string& stage, Fn&& fn) {
    StageClock clock(timings, stage);
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

std::vector<Vector> embed_batched(Embedder& embedder, const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += kEmbedBatch) {
        std::size_t end = std::min(texts.size(), i + kEmbedBatch);
        auto part = embedder.embed(std::span<const std::string>(texts).subspan(i, end - i));
        for (auto& v : part) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::zs: return "zs";
        case Strategy::sim: return "sim";
        case Strategy::ae: return "ae";
        case Strategy::mmr: return "mmr";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "zs") return Strategy::zs;
    if (name == "sim") return Strategy::sim;
    if (name == "ae") return Strategy::ae;
    if (name == "mmr") return Strategy::mmr;
    throw ConfigError(fmt::format("unknown strategy '{}' (expected zs, sim, ae or mmr)", name));
}

void PipelineConfig::validate() const {
    if (selection.p == 0) throw ConfigError("p must be >= 1");
    if (selection.p_pre < selection.p) {
        throw ConfigError(fmt::format("p_pre ({}) must be >= p ({})", selection.p_pre, selection.p));
    }
    if (!(mmr_w_base >= 0.0) || !std::isfinite(mmr_w_base)) throw ConfigError("mmr w_base must be >= 0");
    if (!(mmr_delta >= 0.0) || !std::isfinite(mmr_delta)) throw ConfigError("mmr delta must be >= 0");
    if (retrieval_cap == 0) throw ConfigError("retrieval cap must be >= 1");
    if (!(llm.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (llm.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (answer_template != "auto" && answer_template != "kg_answer" &&
        answer_template != "kg_answer_mintaka") {
        throw ConfigError(fmt::format("unknown answer template '{}'", answer_template));
    }
}

json PipelineConfig::to_json() const {
    return {{"strategy", std::string(to_string(strategy))},
            {"rerank", rerank},
            {"p", selection.p},
            {"p_pre", selection.p_pre},
            {"mmr_w_base", mmr_w_base},
            {"mmr_delta", mmr_delta},
            {"mmr_full", mmr_full},
            {"retrieval_cap", retrieval_cap},
            {"kg_source", std::string(to_string(kg_source))},
            {"answer_template", answer_template},
            {"answer_hint", answer_hint},
            {"embed_model", embed_model},
            {"cross_model", cross_model},
            {"llm_model", llm.model},
            {"temperature", llm.temperature},
            {"max_tokens", llm.max_tokens}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.strategy = strategy_from_string(j.value("strategy", std::string("sim")));
    c.rerank = j.value("rerank", false);
    c.selection.p = j.value("p", c.selection.p);
    c.selection.p_pre = j.value("p_pre", c.selection.p_pre);
    c.mmr_w_base = j.value("mmr_w_base", c.mmr_w_base);
    c.mmr_delta = j.value("mmr_delta", c.mmr_delta);
    c.mmr_full = j.value("mmr_full", c.mmr_full);
    c.retrieval_cap = j.value("retrieval_cap", c.retrieval_cap);
    c.kg_source = kg_source_from_string(j.value("kg_source", std::string("umls")));
    c.answer_template = j.value("answer_template", c.answer_template);
    c.answer_hint = j.value("answer_hint", c.answer_hint);
    c.embed_model = j.value("embed_model", c.embed_model);
    c.cross_model = j.value("cross_model", c.cross_model);
    c.llm.model = j.value("llm_model", c.llm.model);
    c.llm.temperature = j.value("temperature", c.llm.temperature);
    c.llm.max_tokens = j.value("max_tokens", c.llm.max_tokens);
    return c;
}

std::vector<std::string> parse_entity_list(std::string_view completion,
                                           std::vector<std::string>* warnings) {
    std::string text = trim(completion);
    if (to_lower(text).starts_with("entities:")) text = trim(text.substr(9));

    std::vector<std::string> segments;
    std::string current;
    for (char c : text) {
        if (c == ',' || c == ';' || c == '\n') {
            segments.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    segments.push_back(std::move(current));

    std::vector<std::string> out;
    std::vector<std::string> seen;
    bool dropped_prose = false;
    for (auto& raw : segments) {
        std::string entity = strip_quotes(strip_list_marker(raw));
        if (entity.empty() || is_none_sentinel(entity)) continue;
        if (split_whitespace(entity).size() > kMaxEntityWords) {
            dropped_prose = true;
            continue;
        }
        std::string key = to_lower(entity);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(std::move(key));
        out.push_back(std::move(entity));
    }
    if (out.empty() && dropped_prose && warnings != nullptr) {
        warnings->push_back("ner: completion could not be parsed as an entity list");
    }
    return out;
}

std::vector<std::string> extract_entities(std::string_view question, Completer& llm,
                                          const PromptTemplate& ner_template,
                                          const CompletionSettings& settings,
                                          std::vector<std::string>* warnings) {
    if (trim(question).empty()) throw ValidationError("extract_entities: empty question");
    std::string completion;
    try {
        completion = llm.complete(settings.request(ner_template.render({{"question", std::string(question)}})));
    } catch (const EmptyCompletionError&) {
        if (warnings != nullptr) warnings->push_back("ner: empty completion");
        return {};
    }
    return parse_entity_list(completion, warnings);
}

std::string build_prompt(const PromptTemplate& answer_template, std::string_view question,
                         std::span<const RankedTriple> selected, std::string_view answer_hint) {
    std::string facts;
    if (selected.empty()) {
        facts = std::string(kNoFactsLine);
    } else {
        for (std::size_t i = 0; i < selected.size(); ++i) {
            if (i > 0) facts += '\n';
            facts += "- " + textualize(selected[i].triple);
        }
    }
    std::string hint = trim(answer_hint);
    if (!hint.empty()) hint.insert(0, " ");
    return answer_template.render(
        {{"question", std::string(question)}, {"triples", facts}, {"answer_hint", hint}});
}

Pipeline::Pipeline(PipelineConfig config, ProviderSet providers, std::shared_ptr<KgClient> kg,
                   TemplateSet templates)
    : config_(std::move(config)), providers_(std::move(providers)), kg_(std::move(kg)),
      templates_(std::move(templates)) {
    config_.validate();
    if (!providers_.completer) throw ConfigError("pipeline needs an LLM provider");
    if (config_.strategy != Strategy::zs) {
        if (!providers_.embedder) throw ConfigError("pipeline needs an embedding provider");
        if (!kg_) throw ConfigError("pipeline needs a KG client");
        if (kg_->source() != config_.kg_source) {
            throw ConfigError("KG client source differs from the configured source");
        }
    }
    if (config_.rerank && !providers_.scorer) throw ConfigError("re-ranking needs a cross-encoder");
}

const PromptTemplate& Pipeline::answer_template_for(const QAPair& pair) const {
    if (config_.answer_template == "kg_answer_mintaka") return templates_.get(TemplateName::kg_answer_mintaka);
    if (config_.answer_template == "kg_answer") return templates_.get(TemplateName::kg_answer);
    if (to_lower(pair.dataset).find("mintaka") != std::string::npos) {
        return templates_.get(TemplateName::kg_answer_mintaka);
    }
    return templates_.get(TemplateName::kg_answer);
}

AnswerRecord Pipeline::answer(const QAPair& pair) const {
    if (trim(pair.question).empty()) throw StageError("input", "question is empty");

    AnswerRecord rec;
    rec.question_id = pair.id;
    rec.question = pair.question;
    rec.config_snapshot = config_.to_json();
    const CompletionSettings& llm = config_.llm;

    if (config_.strategy == Strategy::zs) {
        rec.flags.push_back("zero_shot");
    } else {
        rec.mentions = run_stage(rec.timings, "ner", [&] {
            return extract_entities(pair.question, *providers_.completer,
                                    templates_.get(TemplateName::ner), llm, &rec.warnings);
        });

        std::vector<Triple> retrieved = run_stage(rec.timings, "kg-retrieval", [&] {
            for (const auto& mention : rec.mentions) {
                auto entity = kg_->map_entity(mention);
                if (!entity) {
                    rec.warnings.push_back(fmt::format("kg: no concept for '{}'", mention));
                    continue;
                }
                bool dup = std::any_of(rec.concepts.begin(), rec.concepts.end(),
                                       [&](const ConceptRef& c) { return c.id() == entity->id(); });
                if (!dup) rec.concepts.push_back(*entity);
            }
            std::vector<Triple> all;
            for (const auto& entity : rec.concepts) {
                for (auto& t : kg_->fetch_one_hop(entity, config_.retrieval_cap)) {
                    bool dup = std::any_of(all.begin(), all.end(),
                                           [&](const Triple& o) { return o.same_fact(t); });
                    if (!dup) all.push_back(std::move(t));
                }
            }
            return all;
        });
        rec.retrieved_count = retrieved.size();

        if (retrieved.empty()) {
            rec.flags.push_back("zero_shot_fallback");
            if (rec.mentions.empty()) {
                rec.warnings.push_back("fallback: no entities extracted");
            } else if (rec.concepts.empty()) {
                rec.warnings.push_back("fallback: no entity mapped to the KG");
            } else {
                rec.warnings.push_back("fallback: mapped concepts have no relations");
            }
        } else {
            std::vector<std::string> texts;
            texts.reserve(retrieved.size() + 1);
            for (const auto& t : retrieved) texts.push_back(textualize(t));

            std::vector<Candidate> candidates = run_stage(rec.timings, "embedding", [&] {
                auto vectors = embed_batched(*providers_.embedder, texts);
                std::vector<Candidate> out;
                out.reserve(retrieved.size());
                for (std::size_t i = 0; i < retrieved.size(); ++i) {
                    out.push_back(Candidate{retrieved[i], std::move(vectors[i])});
                }
                return out;
            });

            rec.ranked = run_stage(rec.timings, "ranking", [&] {
                auto question_vector = [&] {
                    std::vector<std::string> q{pair.question};
                    return providers_.embedder->embed(q).front();
                };
                switch (config_.strategy) {
                    case Strategy::sim:
                        return rank_similarity(question_vector(), candidates);
                    case Strategy::mmr: {
                        MmrParams params{config_.mmr_w_base, config_.mmr_delta,
                                         config_.mmr_full ? candidates.size() : config_.selection.p_pre};
                        return rank_mmr(question_vector(), candidates, params);
                    }
                    case Strategy::ae: {
                        auto expanded = rank_answer_expansion(
                            pair.question, candidates, *providers_.completer, *providers_.embedder,
                            templates_.get(TemplateName::answer_expansion), llm);
                        rec.expansion = expanded.expansion;
                        if (expanded.fallback) rec.flags.push_back("answer_expansion_fallback");
                        return std::move(expanded.ranked);
                    }
                    case Strategy::zs:
                        break;
                }
                throw StageError("ranking", "unreachable strategy");
            });

            if (config_.rerank) {
                rec.selected = run_stage(rec.timings, "rerank", [&] {
                    return rerank_top_p(pair.question, rec.ranked, config_.selection,
                                        *providers_.scorer);
                });
            } else {
                std::size_t keep = std::min(config_.selection.p, rec.ranked.size());
                rec.selected.assign(rec.ranked.begin(), rec.ranked.begin() + static_cast<std::ptrdiff_t>(keep));
            }
        }
    }

    rec.prompt = build_prompt(answer_template_for(pair), pair.question, rec.selected, config_.answer_hint);
    rec.answer = run_stage(rec.timings, "generation", [&] {
        return trim(providers_.completer->complete(llm.request(rec.prompt)));
    });
    return rec;
}

}  // namespace kgrank
