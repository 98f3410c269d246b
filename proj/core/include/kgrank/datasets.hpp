#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrank {

/// One row of the normalized JSONL schema:
/// {"id": str, "question": str, "references": [str], "field": str, "dataset": str}
struct QAPair {
    std::string id;
    std::string question;
    std::vector<std::string> references;
    std::string field;
    std::string dataset;
    std::size_t line = 0;  ///< 1-based source line, 0 when built in memory

    friend bool operator==(const QAPair& a, const QAPair& b) {
        return a.id == b.id && a.question == b.question && a.references == b.references &&
               a.field == b.field && a.dataset == b.dataset;
    }
};

struct DatasetStats {
    double avg_sentences_q = 0.0;
    double avg_words_q = 0.0;
    double avg_sentences_a = 0.0;
    double avg_words_a = 0.0;
};

/// Parses a JSONL file. Blank lines are skipped. `dataset_name` fills rows
/// that carry no "dataset" key. ValidationError names the offending line;
/// a file without rows is an error too.
std::vector<QAPair> load_dataset(const std::filesystem::path& path,
                                 std::string_view dataset_name = {});

void save_dataset(const std::filesystem::path& path, std::span<const QAPair> pairs);

std::vector<QAPair> filter_by_field(std::span<const QAPair> pairs, std::string_view field);

/// Whitespace-separated tokens.
std::size_t count_words(std::string_view text);

/// Non-blank segments closed by '.', '!' or '?' (runs count once), plus a
/// trailing unterminated segment. Abbreviations are not special-cased, so
/// "Dr. Smith" counts as two.
std::size_t count_sentences(std::string_view text);

/// Averages over all questions and over all references. Datasets without
/// references report 0 for the answer columns.
DatasetStats compute_stats(std::span<const QAPair> pairs);

/// Lowercase, punctuation dropped, articles (a/an/the) dropped, whitespace
/// collapsed.
std::string normalize_answer(std::string_view text);

/// Normalized prediction equals, or contains as a whole-token run, the
/// normalized gold answer.
bool match_short_answer(std::string_view prediction, std::string_view gold);

}  // namespace kgrank
