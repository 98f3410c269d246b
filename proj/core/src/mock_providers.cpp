#include "kgrank/mock_providers.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string substitute_facts(const std::string& response, std::string_view prompt) {
    static const std::regex facts_slot(R"(\{facts:(\d+)\})");
    std::smatch m;
    if (!std::regex_search(response, m, facts_slot)) return response;

    const std::size_t wanted = std::stoul(m[1].str());
    std::vector<std::string> facts;
    std::size_t pos = 0;
    while (pos < prompt.size() && facts.size() < wanted) {
        std::size_t end = prompt.find('\n', pos);
        if (end == std::string_view::npos) end = prompt.size();
        std::string_view line = prompt.substr(pos, end - pos);
        if (line.starts_with("- ")) facts.emplace_back(line.substr(2));
        pos = end + 1;
    }
    std::string joined;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (i > 0) joined += "; ";
        joined += facts[i];
    }
    if (joined.empty()) joined = "no facts";
    return std::string(m.prefix()) + joined + std::string(m.suffix());
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim, std::string model)
    : dim_(dim), model_(std::move(model)) {
    if (dim_ == 0) throw ValidationError("HashingEmbedder dim must be >= 1");
}

std::vector<Vector> HashingEmbedder::do_embed(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<double> acc(dim_, 0.0);
        auto tokens = word_tokens(text);
        if (tokens.empty()) tokens.push_back(trim(text));
        for (const auto& token : tokens) {
            std::uint64_t h = fnv1a(token);
            acc[h % dim_] += 1.0 + static_cast<double>((h >> 32) % 7) / 7.0;
        }
        double norm = 0.0;
        for (double x : acc) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : acc) x /= norm;
        out.emplace_back(std::move(acc));
    }
    return out;
}

OverlapCrossScorer::OverlapCrossScorer(std::string model) : model_(std::move(model)) {}

std::vector<double> OverlapCrossScorer::do_cross_score(std::string_view query,
                                                       std::span<const std::string> passages) {
    auto query_tokens = word_tokens(query);
    std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());
    std::vector<double> scores;
    scores.reserve(passages.size());
    for (const auto& passage : passages) {
        auto tokens = word_tokens(passage);
        std::set<std::string> unique(tokens.begin(), tokens.end());
        std::size_t shared = 0;
        for (const auto& t : unique) shared += query_set.count(t);
        scores.push_back(static_cast<double>(shared) /
                         std::sqrt(1.0 + static_cast<double>(unique.size())));
    }
    return scores;
}

RuleCompleter::RuleCompleter(std::vector<Rule> rules, std::optional<std::string> fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

RuleCompleter RuleCompleter::from_file(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    std::vector<Rule> rules;
    for (const auto& r : doc.value("rules", nlohmann::json::array())) {
        rules.push_back(Rule{r.at("all").get<std::vector<std::string>>(),
                             r.at("response").get<std::string>()});
    }
    std::optional<std::string> fallback;
    if (doc.contains("fallback")) fallback = doc.at("fallback").get<std::string>();
    return RuleCompleter(std::move(rules), std::move(fallback));
}

std::string RuleCompleter::do_complete(const CompletionRequest& request) {
    for (const auto& rule : rules_) {
        bool matches = true;
        for (const auto& needle : rule.all) {
            if (request.prompt.find(needle) == std::string::npos) {
                matches = false;
                break;
            }
        }
        if (matches) return substitute_facts(rule.response, request.prompt);
    }
    if (fallback_) return substitute_facts(*fallback_, request.prompt);
    throw ProviderError("rule completer: no rule matches the prompt");
}

}  // namespace kgrank
