#include "kgrank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_dims(const Vector& query, std::span<const Candidate> candidates) {
    for (const auto& c : candidates) {
        if (c.embedding.dim() != query.dim()) {
            throw ValidationError(fmt::format("candidate dim {} does not match query dim {}",
                                              c.embedding.dim(), query.dim()));
        }
    }
}

}  // namespace

void MmrParams::validate() const {
    if (!(w_base >= 0.0) || !std::isfinite(w_base)) throw ValidationError("mmr w_base must be >= 0");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("mmr delta must be >= 0");
    if (k == 0) throw ValidationError("mmr k must be >= 1");
}

void RerankParams::validate() const {
    if (p == 0) throw ValidationError("p must be >= 1");
    if (p_pre == 0) throw ValidationError("p_pre must be >= 1");
}

std::string textualize(const Triple& triple) {
    std::string relation = triple.relation();
    std::replace(relation.begin(), relation.end(), '_', ' ');
    return triple.head().preferred_name() + " " + relation + " " + triple.tail().preferred_name();
}

double cosine(const Vector& u, const Vector& v) {
    if (u.dim() != v.dim()) {
        throw ValidationError(fmt::format("cosine: dim mismatch ({} vs {})", u.dim(), v.dim()));
    }
    const double uu = dot(u.components(), u.components());
    const double vv = dot(v.components(), v.components());
    if (uu == 0.0 || vv == 0.0) throw ValidationError("cosine: zero vector");
    const double c = dot(u.components(), v.components()) / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(c, -1.0, 1.0);
}

std::vector<RankedTriple> rank_similarity(const Vector& query, std::span<const Candidate> candidates) {
    if (candidates.empty()) throw ValidationError("rank_similarity: no candidates");
    check_dims(query, candidates);

    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& c : candidates) scores.push_back(cosine(query, c.embedding));

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RankedTriple> out;
    out.reserve(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        out.push_back(RankedTriple{candidates[order[r]].triple, scores[order[r]], r});
    }
    return out;
}

std::vector<RankedTriple> rank_mmr(const Vector& query, std::span<const Candidate> candidates,
                                   const MmrParams& params) {
    if (candidates.empty()) throw ValidationError("rank_mmr: no candidates");
    params.validate();
    check_dims(query, candidates);

    const std::size_t n = candidates.size();
    const std::size_t k = std::min(params.k, n);

    std::vector<double> relevance(n), norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        relevance[i] = cosine(query, candidates[i].embedding);
        const auto v = candidates[i].embedding.components();
        norm[i] = std::sqrt(dot(v, v));
    }

    // redundancy_sum[i] accumulates cos(r_i, s) over the selected s, in
    // selection order.
    std::vector<double> redundancy_sum(n, 0.0);
    std::vector<bool> taken(n, false);
    std::vector<RankedTriple> out;
    out.reserve(k);

    for (std::size_t picked = 0; picked < k; ++picked) {
        const double w = params.w_base + params.delta * static_cast<double>(picked);
        std::size_t best = n;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            double score = relevance[i];
            if (picked > 0) score -= w * (redundancy_sum[i] / static_cast<double>(picked));
            if (best == n || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        taken[best] = true;
        out.push_back(RankedTriple{candidates[best].triple, best_score, picked});
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            // Same arithmetic as cosine(), with the norms hoisted.
            const double c = dot(candidates[i].embedding.components(), candidates[best].embedding.components()) /
                             (norm[i] * norm[best]);
            redundancy_sum[i] += std::clamp(c, -1.0, 1.0);
        }
    }
    return out;
}

ExpansionRanking rank_answer_expansion(std::string_view question,
                                       std::span<const Candidate> candidates, Completer& llm,
                                       Embedder& embedder, const PromptTemplate& expansion_template,
                                       const CompletionSettings& settings) {
    if (candidates.empty()) throw ValidationError("rank_answer_expansion: no candidates");

    ExpansionRanking result;
    try {
        result.expansion = trim(llm.complete(
            settings.request(expansion_template.render({{"question", std::string(question)}}))));
    } catch (const EmptyCompletionError&) {
        result.expansion.clear();
    }

    std::string query_text(question);
    if (result.expansion.empty()) {
        result.fallback = true;
    } else {
        query_text += " " + result.expansion;
    }
    std::vector<std::string> texts{std::move(query_text)};
    auto query = embedder.embed(texts);
    result.ranked = rank_similarity(query.front(), candidates);
    return result;
}

std::vector<RankedTriple> rerank_top_p(std::string_view question,
                                       std::span<const RankedTriple> ordered,
                                       const RerankParams& params, CrossScorer& scorer) {
    if (ordered.empty()) throw ValidationError("rerank_top_p: nothing to re-rank");
    params.validate();

    const std::size_t pool = std::min(params.p_pre, ordered.size());
    std::vector<std::string> passages;
    passages.reserve(pool);
    for (std::size_t i = 0; i < pool; ++i) passages.push_back(textualize(ordered[i].triple));

    auto scores = scorer.cross_score(question, passages);

    std::vector<std::size_t> order(pool);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ordered[a].rank < ordered[b].rank;
    });

    const std::size_t keep = std::min(params.p, pool);
    std::vector<RankedTriple> out;
    out.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) {
        out.push_back(RankedTriple{ordered[order[r]].triple, scores[order[r]], r});
    }
    return out;
}

}  // namespace kgrank
