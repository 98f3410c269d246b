#include <regex>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/metrics.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

namespace {

constexpr std::string_view kCriteria =
    "- Factuality: the answer agrees with established medical knowledge and its claims can be "
    "checked against trusted sources.\n"
    "- Readability: the answer is easy for the asker to follow, with suitable wording and "
    "structure.\n"
    "- Relevance: the answer addresses the question that was asked and covers the information "
    "that bears on it.\n"
    "- Completeness: the answer describes the whole clinical situation or question, including "
    "other considerations that matter.";

}  // namespace

std::string_view to_string(Winner winner) {
    switch (winner) {
        case Winner::a: return "a";
        case Winner::b: return "b";
        case Winner::tie: return "tie";
    }
    return "unknown";
}

int parse_judge_reply(std::string_view reply) {
    static const std::regex verdict(R"(verdict\s*[:=]?\s*[*"']*\s*(?:answer\s*)?(1|2|tie))",
                                    std::regex::icase);
    std::string text(reply);
    int result = -1;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), verdict);
         it != std::sregex_iterator(); ++it) {
        std::string v = to_lower((*it)[1].str());
        result = v == "1" ? 1 : v == "2" ? 2 : 0;
    }
    return result;
}

JudgeVerdict judge_pairwise(std::string_view question, std::string_view answer_a,
                            std::string_view answer_b, Completer& llm,
                            const PromptTemplate& judge_template, const JudgeOptions& options) {
    if (trim(answer_a).empty() || trim(answer_b).empty()) {
        throw ValidationError("judge_pairwise: both answers must be non-empty");
    }
    JudgeVerdict verdict;
    verdict.criteria_version = std::string(kCriteriaVersion);
    if (trim(answer_a) == trim(answer_b)) {
        verdict.winner = Winner::tie;
        verdict.rationale = "identical answers";
        return verdict;
    }

    auto ask = [&](std::string_view first, std::string_view second) {
        return llm.complete(options.llm.request(judge_template.render({{"criteria", std::string(kCriteria)},
                                                                       {"question", std::string(question)},
                                                                       {"answer_1", std::string(first)},
                                                                       {"answer_2", std::string(second)}})));
    };

    // Map "Answer 1/2" back to a/b for each presentation order.
    const std::string forward = ask(answer_a, answer_b);
    const int forward_pick = parse_judge_reply(forward);
    auto forward_winner = forward_pick == 1 ? Winner::a : forward_pick == 2 ? Winner::b : Winner::tie;
    verdict.rationale = trim(forward);
    verdict.unparsed = forward_pick < 0;

    if (!options.swap_debias) {
        verdict.winner = forward_winner;
        return verdict;
    }

    const std::string swapped = ask(answer_b, answer_a);
    const int swapped_pick = parse_judge_reply(swapped);
    auto swapped_winner = swapped_pick == 1 ? Winner::b : swapped_pick == 2 ? Winner::a : Winner::tie;
    verdict.rationale += "\n---\n" + trim(swapped);
    verdict.unparsed = verdict.unparsed || swapped_pick < 0;

    verdict.winner = (!verdict.unparsed && forward_winner == swapped_winner) ? forward_winner : Winner::tie;
    return verdict;
}

}  // namespace kgrank
