#include "kgrank/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "kgrank/cassette.hpp"
#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kGraphScheme = "mock:graph=";

std::shared_ptr<KgBackend> make_backend(const RunConfig& c) {
    auto memory = [](std::string_view url) -> std::shared_ptr<KgBackend> {
        return std::make_shared<MemoryGraphBackend>(
            MemoryGraphBackend::from_file(std::string(url.substr(kGraphScheme.size()))));
    };
    if (c.pipeline.kg_source == KgSource::umls) {
        if (c.kg.umls_url.starts_with(kGraphScheme)) return memory(c.kg.umls_url);
        UmlsBackend::Options o;
        o.api_key = c.kg.umls_api_key;
        o.base_url = c.kg.umls_url;
        return std::make_shared<UmlsBackend>(std::move(o));
    }
    if (c.kg.dbpedia_lookup_url.starts_with(kGraphScheme)) return memory(c.kg.dbpedia_lookup_url);
    DbpediaBackend::Options o;
    o.lookup_url = c.kg.dbpedia_lookup_url;
    o.sparql_url = c.kg.dbpedia_sparql_url;
    return std::make_shared<DbpediaBackend>(std::move(o));
}

// replay: fixtures only (the fixture dir, else the cache dir).
// record: live backend writing into the fixture dir when one is given.
// live:   live backend with the regular cache.
std::shared_ptr<KgClient> make_kg_client(const RunConfig& c) {
    if (c.pipeline.strategy == Strategy::zs) return nullptr;
    const KgSource source = c.pipeline.kg_source;
    switch (c.mode) {
        case ProviderMode::replay: {
            fs::path dir = c.kg.fixtures.empty() ? c.kg.cache_dir : c.kg.fixtures;
            return std::make_shared<KgClient>(nullptr, source, KgClientOptions{dir, true});
        }
        case ProviderMode::record: {
            fs::path dir = c.kg.fixtures.empty() ? c.kg.cache_dir : c.kg.fixtures;
            return std::make_shared<KgClient>(make_backend(c), source, KgClientOptions{dir, false});
        }
        case ProviderMode::live:
            return std::make_shared<KgClient>(make_backend(c), source, KgClientOptions{c.kg.cache_dir, false});
    }
    throw ConfigError("unknown provider mode");
}

TemplateSet load_templates(const RunConfig& c) {
    return c.templates.empty() ? TemplateSet::builtin() : TemplateSet::from_directory(c.templates);
}

std::vector<QAPair> load_pairs(const fs::path& path, const std::string& field) {
    auto pairs = load_dataset(path, path.stem().string());
    if (!field.empty()) {
        pairs = filter_by_field(pairs, field);
        if (pairs.empty()) throw ValidationError(fmt::format("no rows with field '{}' in {}", field, path.string()));
    }
    return pairs;
}

void reset_dir(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
}

json timings_json(const AnswerRecord& rec) {
    json j = json::object();
    for (const auto& t : rec.timings) j[t.stage] = t.millis;
    return j;
}

struct Failure {
    std::string id;
    std::string stage;
    std::string message;
};

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    std::vector<QAPair> pairs;
    std::unique_ptr<Pipeline> pipeline;
    try {
        validate_run_config(config);
        pairs = load_pairs(config.dataset, config.field);

        std::map<std::string, std::string> stems;
        for (const auto& p : pairs) {
            auto [it, fresh] = stems.emplace(safe_file_stem(p.id), p.id);
            if (!fresh) {
                throw ValidationError(fmt::format("question ids '{}' and '{}' map to the same file name",
                                                  it->second, p.id));
            }
        }

        ProviderSetOptions po;
        po.mode = config.mode;
        po.cassette_dir = config.cassettes;
        po.embed = config.embed;
        po.cross = config.cross;
        po.llm = config.llm;
        pipeline = std::make_unique<Pipeline>(config.pipeline, make_providers(po), make_kg_client(config),
                                              load_templates(config));
    } catch (const std::exception& e) {
        err << "kgrank: " << e.what() << "\n";
        return kExitInput;
    }

    const fs::path run_dir = config.run_dir();
    reset_dir(run_dir / "answers");
    reset_dir(run_dir / "timings");
    reset_dir(run_dir / "errors");
    write_file_atomic(run_dir / "config.json", config.to_json().dump(2) + "\n");

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::vector<Failure> failures;
    std::size_t fallbacks = 0;

    auto worker = [&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) {
            const QAPair& pair = pairs[i];
            const std::string stem = safe_file_stem(pair.id);
            try {
                AnswerRecord rec = pipeline->answer(pair);
                write_file_atomic(run_dir / "answers" / (stem + ".json"), serialize_record(rec));
                write_file_atomic(run_dir / "timings" / (stem + ".json"), timings_json(rec).dump(2) + "\n");
                bool fell_back = std::find(rec.flags.begin(), rec.flags.end(), "zero_shot_fallback") != rec.flags.end();
                std::lock_guard lock(mu);
                if (fell_back) ++fallbacks;
            } catch (const std::exception& e) {
                std::string stage = "unknown";
                if (auto* se = dynamic_cast<const StageError*>(&e)) stage = se->stage();
                json j = {{"question_id", pair.id}, {"stage", stage}, {"message", e.what()}};
                write_file_atomic(run_dir / "errors" / (stem + ".json"), j.dump(2) + "\n");
                std::lock_guard lock(mu);
                failures.push_back({pair.id, stage, e.what()});
            }
        }
    };

    const std::size_t n_threads = std::min(config.parallelism, pairs.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::sort(failures.begin(), failures.end(), [](const Failure& a, const Failure& b) { return a.id < b.id; });
    for (const auto& f : failures) err << fmt::format("kgrank: {} failed in {}: {}\n", f.id, f.stage, f.message);

    out << fmt::format("run {}: {} questions, {} answered, {} failed, {} zero-shot fallbacks -> {}\n",
                       config.run_id, pairs.size(), pairs.size() - failures.size(), failures.size(),
                       fallbacks, run_dir.string());
    return failures.empty() ? kExitOk : kExitPartial;
}

std::vector<AnswerRecord> load_run_answers(const fs::path& run_dir) {
    const fs::path dir = run_dir / "answers";
    if (!fs::is_directory(dir)) throw ValidationError(fmt::format("{} has no answers directory", run_dir.string()));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<AnswerRecord> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        try {
            out.push_back(answer_record_from_json(json::parse(read_file(f))));
        } catch (const json::exception& e) {
            throw ValidationError(fmt::format("{}: {}", f.string(), e.what()));
        }
    }
    return out;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
    try {
        auto answers = load_run_answers(options.run_dir);
        if (answers.empty()) throw ValidationError(fmt::format("no answer records in {}", options.run_dir.string()));

        fs::path dataset = options.dataset;
        std::string field = options.field;
        if (dataset.empty()) {
            const fs::path cfg = options.run_dir / "config.json";
            if (!fs::exists(cfg)) throw ConfigError("no --dataset given and the run has no config.json");
            json j = json::parse(read_file(cfg));
            dataset = j.value("dataset", std::string());
            if (field.empty()) field = j.value("field", std::string());
        }
        if (!fs::is_regular_file(dataset)) throw ConfigError(fmt::format("dataset {} does not exist", dataset.string()));

        auto pairs = load_pairs(dataset, field);
        auto report = evaluate_run(answers, pairs, options.metrics);
        write_file_atomic(options.run_dir / "report.csv", report_csv(report));
        write_file_atomic(options.run_dir / "report.json", report_json(report).dump(2) + "\n");
        write_file_atomic(options.run_dir / "export_for_external_scorers.jsonl",
                          export_for_external_scorers(answers, pairs));

        out << fmt::format("{} answers scored\n", report.rows.size());
        for (Metric m : report.metrics) {
            if (m == Metric::accuracy) {
                out << fmt::format("accuracy  {:.4f}\n", report.mean_accuracy);
            } else {
                const Prf& p = report.mean_prf.at(m);
                out << fmt::format("{:<9} P {:.4f}  R {:.4f}  F1 {:.4f}\n", to_string(m), p.precision,
                                   p.recall, p.f1);
            }
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "kgrank: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        err << "kgrank: " << e.what() << "\n";
        return kExitInput;
    }
}

int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err) {
    try {
        auto pairs = load_pairs(options.dataset, options.field);
        DatasetStats s = compute_stats(pairs);
        const std::string name = pairs.front().dataset.empty() ? options.dataset.stem().string() : pairs.front().dataset;
        json j = {{"dataset", name},
                  {"questions", pairs.size()},
                  {"avg_sentences_q", s.avg_sentences_q},
                  {"avg_words_q", s.avg_words_q},
                  {"avg_sentences_a", s.avg_sentences_a},
                  {"avg_words_a", s.avg_words_a}};
        out << fmt::format("{:<12} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "dataset", "questions", "sent/q",
                           "words/q", "sent/a", "words/a");
        out << fmt::format("{:<12} {:>9} {:>9.2f} {:>9.2f} {:>9.2f} {:>9.2f}\n", name,
                           pairs.size(), s.avg_sentences_q, s.avg_words_q, s.avg_sentences_a, s.avg_words_a);
        if (options.json_out.empty()) {
            out << j.dump(2) << "\n";
        } else {
            write_file_atomic(options.json_out, j.dump(2) + "\n");
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "kgrank: " << e.what() << "\n";
        return kExitInput;
    }
}

int cmd_cache(const CacheOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.action == "inspect") {
            if (!options.cache_dir.empty()) {
                for (KgSource s : {KgSource::umls, KgSource::dbpedia}) {
                    fs::path dir = options.cache_dir / std::string(to_string(s));
                    std::size_t files = 0;
                    std::uintmax_t bytes = 0;
                    if (fs::is_directory(dir)) {
                        for (const auto& e : fs::directory_iterator(dir)) {
                            if (!e.is_regular_file()) continue;
                            ++files;
                            bytes += e.file_size();
                        }
                    }
                    out << fmt::format("kg {:<8} {:>6} entries {:>10} bytes  {}\n", to_string(s), files, bytes,
                                       dir.string());
                }
            }
            if (!options.cassettes.empty()) {
                for (ProviderKind k : {ProviderKind::embed, ProviderKind::cross_score, ProviderKind::complete}) {
                    fs::path file = cassette_path(options.cassettes, k);
                    std::size_t n = fs::exists(file) ? Cassette::open(k, file)->size() : 0;
                    out << fmt::format("cassette {:<12} {:>6} entries  {}\n", to_string(k), n, file.string());
                }
            }
            return kExitOk;
        }
        if (options.action == "clear") {
            if (options.cache_dir.empty()) throw ConfigError("cache clear needs --cache-dir");
            std::vector<std::string> sources;
            if (options.source.empty()) {
                sources = {"umls", "dbpedia"};
            } else {
                sources = {std::string(to_string(kg_source_from_string(options.source)))};
            }
            std::uintmax_t removed = 0;
            for (const auto& s : sources) {
                fs::path dir = options.cache_dir / s;
                if (fs::exists(dir)) removed += fs::remove_all(dir) - 1;
            }
            out << fmt::format("removed {} cache entries from {}\n", removed, options.cache_dir.string());
            return kExitOk;
        }
        throw ConfigError(fmt::format("unknown cache action '{}'", options.action));
    } catch (const Error& e) {
        err << "kgrank: " << e.what() << "\n";
        return kExitInput;
    }
}

namespace {

std::shared_ptr<Completer> make_judge_llm(const RunConfig& c) {
    switch (c.mode) {
        case ProviderMode::live:
            return make_live_completer(c.llm, RetryPolicy{});
        case ProviderMode::record:
            if (c.cassettes.empty()) throw ConfigError("record mode needs --cassettes");
            fs::create_directories(c.cassettes);
            return std::make_shared<RecordingCompleter>(
                make_live_completer(c.llm, RetryPolicy{}),
                Cassette::open_or_create(ProviderKind::complete, cassette_path(c.cassettes, ProviderKind::complete)));
        case ProviderMode::replay: {
            fs::path file = cassette_path(c.cassettes, ProviderKind::complete);
            if (!fs::exists(file)) throw ConfigError(fmt::format("no cassette at {}", file.string()));
            return std::make_shared<ReplayCompleter>(Cassette::open(ProviderKind::complete, file));
        }
    }
    throw ConfigError("unknown provider mode");
}

}  // namespace

int cmd_judge(const JudgeCommandOptions& options, const RunConfig& config, std::ostream& out,
              std::ostream& err) {
    std::vector<AnswerRecord> baseline, candidate;
    std::shared_ptr<Completer> llm;
    TemplateSet templates = TemplateSet::builtin();
    try {
        baseline = load_run_answers(options.baseline_run);
        candidate = load_run_answers(options.candidate_run);
        llm = make_judge_llm(config);
        templates = load_templates(config);
    } catch (const Error& e) {
        err << "kgrank: " << e.what() << "\n";
        return kExitInput;
    }

    std::map<std::string, const AnswerRecord*> by_id;
    for (const auto& r : candidate) by_id[r.question_id] = &r;

    JudgeOptions jo;
    jo.llm = config.pipeline.llm;
    jo.swap_debias = options.swap_debias;

    std::map<std::string, int> counts{{"baseline", 0}, {"tie", 0}, {"candidate", 0}};
    json verdicts = json::array();
    int failed = 0;
    for (const auto& a : baseline) {
        auto it = by_id.find(a.question_id);
        if (it == by_id.end()) continue;
        try {
            JudgeVerdict v = judge_pairwise(a.question, a.answer, it->second->answer, *llm,
                                            templates.get(TemplateName::judge), jo);
            const char* label = v.winner == Winner::a ? "baseline" : v.winner == Winner::b ? "candidate" : "tie";
            ++counts[label];
            verdicts.push_back({{"id", a.question_id},
                                {"winner", label},
                                {"rationale", v.rationale},
                                {"unparsed", v.unparsed}});
        } catch (const Error& e) {
            ++failed;
            err << fmt::format("kgrank: judging {} failed: {}\n", a.question_id, e.what());
        }
    }

    json report = {{"criteria_version", std::string(kCriteriaVersion)},
                   {"baseline", options.baseline_run.filename().string()},
                   {"candidate", options.candidate_run.filename().string()},
                   {"swap_debias", options.swap_debias},
                   {"counts", counts},
                   {"verdicts", verdicts}};
    fs::path out_file = options.out_file.empty() ? options.candidate_run / "judge.json" : options.out_file;
    write_file_atomic(out_file, report.dump(2) + "\n");
    out << fmt::format("baseline wins {}, ties {}, candidate wins {} ({} judged) -> {}\n", counts["baseline"],
                       counts["tie"], counts["candidate"], verdicts.size(), out_file.string());
    return failed == 0 ? kExitOk : kExitPartial;
}

}  // namespace kgrank::cli
