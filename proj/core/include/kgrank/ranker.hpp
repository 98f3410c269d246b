#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrank/kg_types.hpp"
#include "kgrank/prompts.hpp"
#include "kgrank/providers.hpp"

namespace kgrank {

struct RankedTriple {
    Triple triple;
    double score;
    std::size_t rank;

    friend bool operator==(const RankedTriple&, const RankedTriple&) = default;
};

/// Redundancy weight grows with every selection: w = w_base + delta * n,
/// where n is the number already selected.
struct MmrParams {
    double w_base = 0.1;
    double delta = 0.01;
    std::size_t k = 60;

    void validate() const;
};

struct Candidate {
    Triple triple;
    Vector embedding;
};

/// "<head name> <relation, underscores as spaces> <tail name>"
std::string textualize(const Triple& triple);

/// ValidationError on a dim mismatch or an all-zero vector.
double cosine(const Vector& u, const Vector& v);

/// All candidates by cosine to `query`, descending; ties keep input order.
std::vector<RankedTriple> rank_similarity(const Vector& query, std::span<const Candidate> candidates);

/// Greedy maximal-marginal-relevance selection of min(k, n) candidates.
///
/// The first pick is the most query-similar candidate. Each later pick
/// maximises
///
///     cos(q, r) - (w_base + delta * n) * mean_{s in selected} cos(r, s)
///
/// with n the number selected so far. Ties go to the lower input index. The
/// score stored on each result is its adjusted score at selection time, so
/// scores need not decrease with rank.
std::vector<RankedTriple> rank_mmr(const Vector& query, std::span<const Candidate> candidates,
                                   const MmrParams& params);

struct ExpansionRanking {
    std::vector<RankedTriple> ranked;
    std::string expansion;  ///< the generated provisional answer
    bool fallback = false;  ///< empty expansion; ranked by the bare question
};

/// Asks the LLM for a provisional answer A, embeds "<question> <A>" and
/// ranks by similarity to that. An empty A falls back to the question alone.
ExpansionRanking rank_answer_expansion(std::string_view question,
                                       std::span<const Candidate> candidates,
                                       Completer& llm, Embedder& embedder,
                                       const PromptTemplate& expansion_template,
                                       const CompletionSettings& settings);

struct RerankParams {
    std::size_t p = 30;      ///< triples kept
    std::size_t p_pre = 60;  ///< prefix of the incoming order sent to the scorer

    void validate() const;
};

/// Cross-encoder pass over the first min(p_pre, n) entries of `ordered`.
/// Returns the best min(p, pool) by cross score, ties by incoming rank,
/// re-numbered from 0 and carrying the cross score.
std::vector<RankedTriple> rerank_top_p(std::string_view question,
                                       std::span<const RankedTriple> ordered,
                                       const RerankParams& params, CrossScorer& scorer);

}  // namespace kgrank
