#include "kgrank/datasets.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

using nlohmann::json;

std::vector<QAPair> load_dataset(const std::filesystem::path& path, std::string_view dataset_name) {
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("cannot open dataset {}", path.string()));

    const std::string default_name =
        dataset_name.empty() ? path.stem().string() : std::string(dataset_name);
    std::vector<QAPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fail = [&](const std::string& why) {
            return ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, why));
        };
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw fail(e.what());
        }
        if (!row.is_object()) throw fail("expected a JSON object");
        QAPair pair;
        try {
            if (!row.contains("id")) throw fail("missing \"id\"");
            if (!row.contains("question")) throw fail("missing \"question\"");
            pair.id = row.at("id").is_string() ? row.at("id").get<std::string>() : row.at("id").dump();
            pair.question = row.at("question").get<std::string>();
            pair.references = row.value("references", std::vector<std::string>{});
            pair.field = row.value("field", std::string());
            pair.dataset = row.value("dataset", default_name);
        } catch (const json::exception& e) {
            throw fail(e.what());
        }
        if (trim(pair.question).empty()) throw fail("empty \"question\"");
        if (pair.id.empty()) throw fail("empty \"id\"");
        pair.line = line_no;
        pairs.push_back(std::move(pair));
    }
    if (pairs.empty()) throw ValidationError(fmt::format("dataset {} has no rows", path.string()));

    std::set<std::string> ids;
    for (const auto& p : pairs) {
        if (!ids.insert(p.id).second) {
            throw ValidationError(fmt::format("{}:{}: duplicate id '{}'", path.string(), p.line, p.id));
        }
    }
    return pairs;
}

void save_dataset(const std::filesystem::path& path, std::span<const QAPair> pairs) {
    std::string out;
    for (const auto& p : pairs) {
        json row = {{"id", p.id},
                    {"question", p.question},
                    {"references", p.references},
                    {"field", p.field},
                    {"dataset", p.dataset}};
        out += row.dump() + "\n";
    }
    write_file_atomic(path, out);
}

std::vector<QAPair> filter_by_field(std::span<const QAPair> pairs, std::string_view field) {
    std::vector<QAPair> out;
    const std::string wanted = to_lower(field);
    for (const auto& p : pairs) {
        if (to_lower(p.field) == wanted) out.push_back(p);
    }
    return out;
}

std::size_t count_words(std::string_view text) {
    return split_whitespace(text).size();
}

std::size_t count_sentences(std::string_view text) {
    std::size_t count = 0;
    bool has_content = false;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            if (has_content) ++count;
            has_content = false;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            has_content = true;
        }
    }
    if (has_content) ++count;
    return count;
}

DatasetStats compute_stats(std::span<const QAPair> pairs) {
    if (pairs.empty()) throw ValidationError("stats need at least one pair");
    double sq = 0, wq = 0, sa = 0, wa = 0;
    std::size_t answers = 0;
    for (const auto& p : pairs) {
        sq += static_cast<double>(count_sentences(p.question));
        wq += static_cast<double>(count_words(p.question));
        for (const auto& r : p.references) {
            sa += static_cast<double>(count_sentences(r));
            wa += static_cast<double>(count_words(r));
            ++answers;
        }
    }
    const auto n = static_cast<double>(pairs.size());
    DatasetStats s;
    s.avg_sentences_q = sq / n;
    s.avg_words_q = wq / n;
    if (answers > 0) {
        s.avg_sentences_a = sa / static_cast<double>(answers);
        s.avg_words_a = wa / static_cast<double>(answers);
    }
    return s;
}

std::string normalize_answer(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (std::ispunct(c)) {
            cleaned.push_back(' ');
        } else {
            cleaned.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    std::string out;
    for (const auto& token : split_whitespace(cleaned)) {
        if (token == "a" || token == "an" || token == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

bool match_short_answer(std::string_view prediction, std::string_view gold) {
    const auto pred = split_whitespace(normalize_answer(prediction));
    const auto want = split_whitespace(normalize_answer(gold));
    if (want.empty()) return pred.empty();
    if (pred.size() < want.size()) return false;
    for (std::size_t i = 0; i + want.size() <= pred.size(); ++i) {
        if (std::equal(want.begin(), want.end(), pred.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

}  // namespace kgrank
