#include "kgrank/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

using nlohmann::json;

Prf Prf::from(double precision, double recall) {
    const double sum = precision + recall;
    return Prf{precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

std::vector<std::string> rouge_tokens(std::string_view text) {
    return split_whitespace(to_lower(text));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) return 0;
    // Two rolling rows over the shorter sequence.
    if (b.size() > a.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

Prf rouge_n(std::string_view candidate, std::string_view reference, int n) {
    if (n != 1 && n != 2) throw ValidationError(fmt::format("rouge_n supports n = 1 or 2, got {}", n));
    auto grams = [n](const std::vector<std::string>& tokens) {
        std::map<std::string, std::size_t> counts;
        const auto size = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + size <= tokens.size(); ++i) {
            std::string key = tokens[i];
            for (std::size_t k = 1; k < size; ++k) key += '\x1f' + tokens[i + k];
            ++counts[key];
        }
        return counts;
    };
    const auto cand = grams(rouge_tokens(candidate));
    const auto ref = grams(rouge_tokens(reference));
    std::size_t cand_total = 0, ref_total = 0, overlap = 0;
    for (const auto& [g, c] : cand) cand_total += c;
    for (const auto& [g, c] : ref) {
        ref_total += c;
        if (auto it = cand.find(g); it != cand.end()) overlap += std::min(c, it->second);
    }
    if (cand_total == 0 || ref_total == 0) return {};
    return Prf::from(static_cast<double>(overlap) / static_cast<double>(cand_total),
                     static_cast<double>(overlap) / static_cast<double>(ref_total));
}

Prf rouge_l(std::string_view candidate, std::string_view reference) {
    const auto cand = rouge_tokens(candidate);
    const auto ref = rouge_tokens(reference);
    if (cand.empty() || ref.empty()) return {};
    const auto lcs = static_cast<double>(lcs_length(cand, ref));
    return Prf::from(lcs / static_cast<double>(cand.size()), lcs / static_cast<double>(ref.size()));
}

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::rouge1: return "rouge1";
        case Metric::rouge2: return "rouge2";
        case Metric::rouge_l: return "rouge_l";
        case Metric::accuracy: return "accuracy";
    }
    return "unknown";
}

Metric metric_from_string(std::string_view name) {
    if (name == "rouge1" || name == "rouge_1") return Metric::rouge1;
    if (name == "rouge2" || name == "rouge_2") return Metric::rouge2;
    if (name == "rouge_l" || name == "rougeL" || name == "rouge-l") return Metric::rouge_l;
    if (name == "accuracy") return Metric::accuracy;
    throw ValidationError(fmt::format("unknown metric '{}'", name));
}

namespace {

Prf score_metric(Metric metric, std::string_view candidate, std::string_view reference) {
    switch (metric) {
        case Metric::rouge1: return rouge_n(candidate, reference, 1);
        case Metric::rouge2: return rouge_n(candidate, reference, 2);
        case Metric::rouge_l: return rouge_l(candidate, reference);
        case Metric::accuracy: break;
    }
    return {};
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json prf_json(const Prf& p) {
    return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

EvalReport evaluate_run(std::span<const AnswerRecord> answers, std::span<const QAPair> pairs,
                        std::span<const Metric> metrics) {
    if (metrics.empty()) throw ValidationError("no metrics requested");
    if (answers.empty()) throw ValidationError("no answers to evaluate");

    std::map<std::string, const AnswerRecord*> by_id;
    for (const auto& a : answers) by_id[a.question_id] = &a;

    std::set<std::string> pair_ids;
    std::vector<std::string> missing, unlabeled;
    for (const auto& p : pairs) {
        pair_ids.insert(p.id);
        if (by_id.count(p.id) && p.references.empty()) unlabeled.push_back(p.id);
    }
    for (const auto& [id, _] : by_id) {
        if (!pair_ids.count(id)) missing.push_back(id);
    }
    auto join = [](const std::vector<std::string>& ids) {
        std::string out;
        for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
        return out;
    };
    if (!missing.empty()) {
        throw ValidationError(fmt::format("answers without a dataset row: {}", join(missing)));
    }
    if (!unlabeled.empty()) {
        throw ValidationError(fmt::format("dataset rows without references: {}", join(unlabeled)));
    }

    EvalReport report;
    report.metrics.assign(metrics.begin(), metrics.end());
    for (const auto& pair : pairs) {
        auto it = by_id.find(pair.id);
        if (it == by_id.end()) continue;
        const std::string& candidate = it->second->answer;
        QuestionScores row;
        row.id = pair.id;
        for (Metric m : report.metrics) {
            if (m == Metric::accuracy) {
                bool hit = std::any_of(pair.references.begin(), pair.references.end(),
                                       [&](const std::string& ref) { return match_short_answer(candidate, ref); });
                row.accuracy = hit ? 1.0 : 0.0;
                continue;
            }
            Prf best;
            bool first = true;
            for (const auto& ref : pair.references) {
                Prf s = score_metric(m, candidate, ref);
                if (first || s.f1 > best.f1) best = s;
                first = false;
            }
            row.prf[m] = best;
        }
        report.rows.push_back(std::move(row));
    }

    const auto n = static_cast<double>(report.rows.size());
    for (Metric m : report.metrics) {
        if (m == Metric::accuracy) {
            double sum = 0.0;
            for (const auto& r : report.rows) sum += r.accuracy;
            report.mean_accuracy = sum / n;
            continue;
        }
        double p = 0, r = 0, f = 0;
        for (const auto& row : report.rows) {
            const Prf& s = row.prf.at(m);
            p += s.precision;
            r += s.recall;
            f += s.f1;
        }
        report.mean_prf[m] = Prf{p / n, r / n, f / n};
    }
    return report;
}

std::string report_csv(const EvalReport& report) {
    std::string out = "id";
    for (Metric m : report.metrics) {
        auto name = to_string(m);
        if (m == Metric::accuracy) {
            out += ",accuracy";
        } else {
            out += fmt::format(",{0}_precision,{0}_recall,{0}_f1", name);
        }
    }
    out += '\n';
    auto row_text = [&](const std::string& id, const std::map<Metric, Prf>& prf, double accuracy) {
        std::string line = csv_field(id);
        for (Metric m : report.metrics) {
            if (m == Metric::accuracy) {
                line += fmt::format(",{:.6f}", accuracy);
            } else {
                const Prf& s = prf.at(m);
                line += fmt::format(",{:.6f},{:.6f},{:.6f}", s.precision, s.recall, s.f1);
            }
        }
        return line + '\n';
    };
    for (const auto& r : report.rows) out += row_text(r.id, r.prf, r.accuracy);
    out += row_text("__mean__", report.mean_prf, report.mean_accuracy);
    return out;
}

json report_json(const EvalReport& report) {
    json metrics = json::array();
    for (Metric m : report.metrics) metrics.push_back(std::string(to_string(m)));

    auto scores = [&](const std::map<Metric, Prf>& prf, double accuracy) {
        json j = json::object();
        for (Metric m : report.metrics) {
            if (m == Metric::accuracy) {
                j["accuracy"] = accuracy;
            } else {
                j[std::string(to_string(m))] = prf_json(prf.at(m));
            }
        }
        return j;
    };
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row = scores(r.prf, r.accuracy);
        row["id"] = r.id;
        rows.push_back(std::move(row));
    }
    return {{"metrics", metrics},
            {"count", report.rows.size()},
            {"corpus_mean", scores(report.mean_prf, report.mean_accuracy)},
            {"per_question", rows}};
}

std::string export_for_external_scorers(std::span<const AnswerRecord> answers,
                                        std::span<const QAPair> pairs) {
    std::map<std::string, const AnswerRecord*> by_id;
    for (const auto& a : answers) by_id[a.question_id] = &a;
    std::string out;
    for (const auto& p : pairs) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) continue;
        json row = {{"id", p.id}, {"candidate", it->second->answer}, {"references", p.references}};
        out += row.dump() + "\n";
    }
    return out;
}

}  // namespace kgrank
