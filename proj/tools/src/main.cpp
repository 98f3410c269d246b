#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kgrank/cli/commands.hpp"
#include "kgrank/errors.hpp"

namespace {

using kgrank::cli::RunFlags;

// Binds a flag to a plain value and copies it into the optional only when
// the user actually passed it, so unset flags defer to the config file.
template <typename T>
struct Pending {
    T value{};
    CLI::Option* option = nullptr;

    void commit(std::optional<T>& target) const {
        if (option != nullptr && option->count() > 0) target = value;
    }
};

struct RunFlagBinder {
    Pending<std::string> config, dataset, field, strategy, rerank, kg, mode, cassettes, kg_fixtures, kg_cache,
        out, templates, run_id;
    Pending<std::size_t> p, p_pre, parallelism;
    Pending<double> mmr_w_base, mmr_delta;

    void attach(CLI::App& app) {
        config.option = app.add_option("--config", config.value, "JSON config file")->check(CLI::ExistingFile);
        dataset.option = app.add_option("--dataset", dataset.value, "normalized JSONL dataset");
        field.option = app.add_option("--field", field.value, "only rows with this field");
        strategy.option = app.add_option("--strategy", strategy.value, "ranking strategy")
                              ->check(CLI::IsMember({"zs", "sim", "ae", "mmr"}));
        rerank.option = app.add_option("--rerank", rerank.value, "cross-encoder rerank")
                            ->check(CLI::IsMember({"on", "off"}));
        p.option = app.add_option("--p", p.value, "triples kept in the prompt");
        p_pre.option = app.add_option("--p-pre", p_pre.value, "pool size handed to the reranker");
        mmr_w_base.option = app.add_option("--mmr-w-base", mmr_w_base.value, "MMR base redundancy weight");
        mmr_delta.option = app.add_option("--mmr-delta", mmr_delta.value, "MMR weight step per pick");
        kg.option = app.add_option("--kg", kg.value, "knowledge graph")->check(CLI::IsMember({"umls", "dbpedia"}));
        mode.option = app.add_option("--mode", mode.value, "provider mode")
                          ->check(CLI::IsMember({"live", "record", "replay"}));
        cassettes.option = app.add_option("--cassettes", cassettes.value, "provider cassette directory");
        kg_fixtures.option = app.add_option("--kg-fixtures", kg_fixtures.value, "KG fixture directory");
        kg_cache.option = app.add_option("--kg-cache", kg_cache.value, "KG cache directory");
        out.option = app.add_option("--out", out.value, "output root (runs/ by default)");
        templates.option = app.add_option("--templates", templates.value, "prompt template directory");
        run_id.option = app.add_option("--run-id", run_id.value, "run directory name");
        parallelism.option = app.add_option("--parallelism", parallelism.value, "questions in flight");
    }

    RunFlags flags() const {
        RunFlags f;
        auto path = [](const Pending<std::string>& src, std::optional<std::filesystem::path>& dst) {
            if (src.option->count() > 0) dst = src.value;
        };
        path(config, f.config);
        path(dataset, f.dataset);
        field.commit(f.field);
        strategy.commit(f.strategy);
        if (rerank.option->count() > 0) f.rerank = rerank.value == "on";
        p.commit(f.p);
        p_pre.commit(f.p_pre);
        mmr_w_base.commit(f.mmr_w_base);
        mmr_delta.commit(f.mmr_delta);
        kg.commit(f.kg);
        mode.commit(f.mode);
        path(cassettes, f.cassettes);
        path(kg_fixtures, f.kg_fixtures);
        path(kg_cache, f.kg_cache);
        path(out, f.out);
        path(templates, f.templates);
        run_id.commit(f.run_id);
        parallelism.commit(f.parallelism);
        return f;
    }
};

}  // namespace

int main(int argc, char** argv) {
    namespace cli = kgrank::cli;

    CLI::App app{"kgrank: knowledge-graph augmented question answering"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "answer every question of a dataset");
    RunFlagBinder run_flags;
    run_flags.attach(*run);

    auto* record = app.add_subcommand("record", "run live and record cassettes and KG fixtures");
    RunFlagBinder record_flags;
    record_flags.attach(*record);

    auto* eval = app.add_subcommand("eval", "score a run against dataset references");
    cli::EvalOptions eval_opts;
    std::vector<std::string> metric_names{"rouge1", "rouge2", "rouge_l"};
    eval->add_option("--run", eval_opts.run_dir, "run directory")->required();
    eval->add_option("--dataset", eval_opts.dataset, "dataset (default: the one the run used)");
    eval->add_option("--field", eval_opts.field, "only rows with this field");
    eval->add_option("--metrics", metric_names, "rouge1 rouge2 rouge_l accuracy")
        ->delimiter(',')
        ->check(CLI::IsMember({"rouge1", "rouge2", "rouge_l", "accuracy"}));

    auto* stats = app.add_subcommand("stats", "average question and answer lengths");
    cli::StatsOptions stats_opts;
    stats->add_option("--dataset", stats_opts.dataset, "normalized JSONL dataset")->required();
    stats->add_option("--field", stats_opts.field, "only rows with this field");
    stats->add_option("--json", stats_opts.json_out, "write JSON here instead of stdout");

    auto* cache = app.add_subcommand("cache", "inspect or clear the KG cache");
    cache->require_subcommand(1);
    cli::CacheOptions cache_opts;
    auto* inspect = cache->add_subcommand("inspect", "entry counts");
    inspect->add_option("--cache-dir", cache_opts.cache_dir, "KG cache directory");
    inspect->add_option("--cassettes", cache_opts.cassettes, "provider cassette directory");
    auto* clear = cache->add_subcommand("clear", "delete cached KG responses");
    clear->add_option("--cache-dir", cache_opts.cache_dir, "KG cache directory")->required();
    clear->add_option("--kg", cache_opts.source, "only this source")->check(CLI::IsMember({"umls", "dbpedia"}));

    auto* judge = app.add_subcommand("judge", "pairwise LLM judgement of two runs");
    cli::JudgeCommandOptions judge_opts;
    RunFlagBinder judge_flags;
    judge->add_option("--baseline", judge_opts.baseline_run, "baseline run directory")->required();
    judge->add_option("--candidate", judge_opts.candidate_run, "candidate run directory")->required();
    judge->add_option("--report", judge_opts.out_file, "output file (default: <candidate>/judge.json)");
    bool no_swap = false;
    judge->add_flag("--no-swap", no_swap, "ask once instead of twice with swapped order");
    judge_flags.config.option = judge->add_option("--config", judge_flags.config.value, "JSON config file");
    judge_flags.mode.option = judge->add_option("--mode", judge_flags.mode.value, "provider mode")
                                  ->check(CLI::IsMember({"live", "record", "replay"}));
    judge_flags.cassettes.option = judge->add_option("--cassettes", judge_flags.cassettes.value, "cassettes");
    judge_flags.templates.option = judge->add_option("--templates", judge_flags.templates.value, "templates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitInput;
    }

    try {
        if (*run || *record) {
            RunFlags flags = *run ? run_flags.flags() : record_flags.flags();
            if (*record) flags.mode = "record";
            return cli::cmd_run(cli::resolve_run_config(flags), std::cout, std::cerr);
        }
        if (*eval) {
            eval_opts.metrics.clear();
            for (const auto& m : metric_names) eval_opts.metrics.push_back(kgrank::metric_from_string(m));
            return cli::cmd_eval(eval_opts, std::cout, std::cerr);
        }
        if (*stats) return cli::cmd_stats(stats_opts, std::cout, std::cerr);
        if (*cache) {
            cache_opts.action = *inspect ? "inspect" : "clear";
            return cli::cmd_cache(cache_opts, std::cout, std::cerr);
        }
        if (*judge) {
            RunFlags flags;
            auto path = [](const Pending<std::string>& src, std::optional<std::filesystem::path>& dst) {
                if (src.option->count() > 0) dst = src.value;
            };
            path(judge_flags.config, flags.config);
            judge_flags.mode.commit(flags.mode);
            path(judge_flags.cassettes, flags.cassettes);
            path(judge_flags.templates, flags.templates);
            judge_opts.swap_debias = !no_swap;
            return cli::cmd_judge(judge_opts, cli::resolve_run_config(flags), std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "kgrank: " << e.what() << "\n";
        return cli::kExitInput;
    }
    return cli::kExitInput;
}
