#include "kgrank/cli/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRedacted = "***";

// Relative paths inside the config file are taken relative to the file.
fs::path resolve_path(const fs::path& base, const std::string& value) {
    fs::path p(value);
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal();
}

// mock:rules=<path> and mock:graph=<path> carry a path too.
std::string resolve_url(const fs::path& base, const std::string& url) {
    for (std::string_view prefix : {"mock:rules=", "mock:graph="}) {
        if (url.starts_with(prefix)) {
            return std::string(prefix) + resolve_path(base, url.substr(prefix.size())).string();
        }
    }
    return url;
}

template <typename T>
void take(const json& obj, const char* key, T& target) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

void take_path(const json& obj, const char* key, const fs::path& base, fs::path& target) {
    std::string value;
    take(obj, key, value);
    if (!value.empty()) target = resolve_path(base, value);
}

void take_endpoint(const json& obj, const fs::path& base, EndpointConfig& endpoint) {
    take(obj, "url", endpoint.url);
    endpoint.url = resolve_url(base, endpoint.url);
    take(obj, "model", endpoint.model);
    take(obj, "api_key", endpoint.api_key);
}

json read_config_file(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError(fmt::format("config file {} does not exist", path.string()));
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config file {}: {}", path.string(), e.what()));
    }
}

void apply_file(const json& file, const fs::path& base, RunConfig& c) {
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");

    take_path(file, "dataset", base, c.dataset);
    take(file, "field", c.field);
    take(file, "run_id", c.run_id);
    take_path(file, "out", base, c.out);
    take_path(file, "cassettes", base, c.cassettes);
    take_path(file, "templates", base, c.templates);
    take(file, "parallelism", c.parallelism);
    if (file.contains("mode")) {
        c.mode = provider_mode_from_string(file.at("mode").get<std::string>());
    }

    if (file.contains("kg")) {
        const json& kg = file.at("kg");
        if (kg.contains("source")) {
            c.pipeline.kg_source = kg_source_from_string(kg.at("source").get<std::string>());
        }
        take_path(kg, "fixtures", base, c.kg.fixtures);
        take_path(kg, "cache_dir", base, c.kg.cache_dir);
        take(kg, "retrieval_cap", c.pipeline.retrieval_cap);
        take(kg, "umls_url", c.kg.umls_url);
        c.kg.umls_url = resolve_url(base, c.kg.umls_url);
        take(kg, "umls_api_key", c.kg.umls_api_key);
        take(kg, "dbpedia_lookup_url", c.kg.dbpedia_lookup_url);
        c.kg.dbpedia_lookup_url = resolve_url(base, c.kg.dbpedia_lookup_url);
        take(kg, "dbpedia_sparql_url", c.kg.dbpedia_sparql_url);
    }

    if (file.contains("ranker")) {
        const json& r = file.at("ranker");
        if (r.contains("strategy")) c.pipeline.strategy = strategy_from_string(r.at("strategy").get<std::string>());
        if (r.contains("rerank")) {
            const json& v = r.at("rerank");
            if (v.is_boolean()) {
                c.pipeline.rerank = v.get<bool>();
            } else if (v.is_string() && (v == "on" || v == "off")) {
                c.pipeline.rerank = v == "on";
            } else {
                throw ConfigError("ranker.rerank must be on, off, true or false");
            }
        }
        take(r, "p", c.pipeline.selection.p);
        take(r, "p_pre", c.pipeline.selection.p_pre);
        if (r.contains("mmr")) {
            const json& m = r.at("mmr");
            take(m, "w_base", c.pipeline.mmr_w_base);
            take(m, "delta", c.pipeline.mmr_delta);
            take(m, "full", c.pipeline.mmr_full);
        }
    }

    if (file.contains("prompt")) {
        take(file.at("prompt"), "template", c.pipeline.answer_template);
        take(file.at("prompt"), "answer_hint", c.pipeline.answer_hint);
    }

    if (file.contains("providers")) {
        const json& p = file.at("providers");
        if (p.contains("embed")) take_endpoint(p.at("embed"), base, c.embed);
        if (p.contains("cross")) take_endpoint(p.at("cross"), base, c.cross);
        if (p.contains("llm")) {
            take_endpoint(p.at("llm"), base, c.llm);
            take(p.at("llm"), "temperature", c.pipeline.llm.temperature);
            take(p.at("llm"), "max_tokens", c.pipeline.llm.max_tokens);
        }
    }
}

void apply_env(const EnvLookup& env, RunConfig& c) {
    if (auto v = env("KGRANK_EMBED_URL")) c.embed.url = *v;
    if (auto v = env("KGRANK_CROSS_URL")) c.cross.url = *v;
    if (auto v = env("KGRANK_LLM_URL")) c.llm.url = *v;
    if (auto v = env("KGRANK_LLM_KEY")) c.llm.api_key = *v;
    if (auto v = env("KGRANK_UMLS_KEY")) c.kg.umls_api_key = *v;
}

void apply_flags(const RunFlags& f, RunConfig& c) {
    if (f.dataset) c.dataset = *f.dataset;
    if (f.field) c.field = *f.field;
    if (f.strategy) c.pipeline.strategy = strategy_from_string(*f.strategy);
    if (f.rerank) c.pipeline.rerank = *f.rerank;
    if (f.p) c.pipeline.selection.p = *f.p;
    if (f.p_pre) c.pipeline.selection.p_pre = *f.p_pre;
    if (f.mmr_w_base) c.pipeline.mmr_w_base = *f.mmr_w_base;
    if (f.mmr_delta) c.pipeline.mmr_delta = *f.mmr_delta;
    if (f.kg) c.pipeline.kg_source = kg_source_from_string(*f.kg);
    if (f.mode) c.mode = provider_mode_from_string(*f.mode);
    if (f.cassettes) c.cassettes = *f.cassettes;
    if (f.kg_fixtures) c.kg.fixtures = *f.kg_fixtures;
    if (f.kg_cache) c.kg.cache_dir = *f.kg_cache;
    if (f.out) c.out = *f.out;
    if (f.templates) c.templates = *f.templates;
    if (f.run_id) c.run_id = *f.run_id;
    if (f.parallelism) c.parallelism = *f.parallelism;
}

std::string default_run_id(const PipelineConfig& p) {
    std::string id(to_string(p.strategy));
    if (p.rerank) id += "-rr";
    if (p.kg_source != KgSource::umls) id += fmt::format("-{}", to_string(p.kg_source));
    return id;
}

json endpoint_json(const EndpointConfig& e) {
    return {{"url", e.url}, {"model", e.model}, {"api_key", e.api_key.empty() ? "" : kRedacted}};
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

RunConfig resolve_run_config(const RunFlags& flags, const EnvLookup& env) {
    RunConfig c;
    c.embed.model = "GanjinZero/UMLSBert_ENG";
    c.cross.model = "ncbi/MedCPT-Cross-Encoder";
    c.llm.model = "gpt-4";

    try {
        apply_env(env, c);
        if (flags.config) {
            apply_file(read_config_file(*flags.config), flags.config->parent_path(), c);
        }
        apply_flags(flags, c);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Unknown enum names and the like surface as ValidationError.
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }

    c.pipeline.embed_model = c.embed.model;
    c.pipeline.cross_model = c.cross.model;
    c.pipeline.llm.model = c.llm.model;
    if (c.run_id.empty()) c.run_id = default_run_id(c.pipeline);
    return c;
}

void validate_run_config(const RunConfig& c) {
    c.pipeline.validate();
    if (c.dataset.empty()) throw ConfigError("no dataset given (--dataset or \"dataset\" in the config file)");
    if (!fs::is_regular_file(c.dataset)) {
        throw ConfigError(fmt::format("dataset {} does not exist", c.dataset.string()));
    }
    if (c.parallelism == 0) throw ConfigError("parallelism must be >= 1");
    if (c.run_id.empty() || safe_file_stem(c.run_id) != c.run_id) {
        throw ConfigError(fmt::format("run id '{}' is not usable as a directory name", c.run_id));
    }
    if (!c.templates.empty() && !fs::is_directory(c.templates)) {
        throw ConfigError(fmt::format("template directory {} does not exist", c.templates.string()));
    }

    if (c.mode == ProviderMode::replay) {
        if (c.cassettes.empty()) throw ConfigError("replay mode needs --cassettes");
        if (!fs::is_directory(c.cassettes)) {
            throw ConfigError(fmt::format("cassette directory {} does not exist", c.cassettes.string()));
        }
    } else {
        if (c.mode == ProviderMode::record && c.cassettes.empty()) {
            throw ConfigError("record mode needs --cassettes");
        }
        const bool uses_kg = c.pipeline.strategy != Strategy::zs;
        if (c.llm.url.empty()) throw ConfigError("no LLM endpoint (KGRANK_LLM_URL or providers.llm.url)");
        if (uses_kg && c.embed.url.empty()) {
            throw ConfigError("no embedding endpoint (KGRANK_EMBED_URL or providers.embed.url)");
        }
        if (uses_kg && c.pipeline.rerank && c.cross.url.empty()) {
            throw ConfigError("no cross-encoder endpoint (KGRANK_CROSS_URL or providers.cross.url)");
        }
    }

    if (c.pipeline.strategy != Strategy::zs && !c.kg.fixtures.empty() && c.mode == ProviderMode::replay &&
        !fs::is_directory(c.kg.fixtures)) {
        throw ConfigError(fmt::format("KG fixture directory {} does not exist", c.kg.fixtures.string()));
    }
    if (c.pipeline.strategy != Strategy::zs && c.kg.fixtures.empty() &&
        c.pipeline.kg_source == KgSource::umls && c.kg.umls_api_key.empty() &&
        !c.kg.umls_url.starts_with("mock:")) {
        throw ConfigError("UMLS needs an API key (KGRANK_UMLS_KEY or kg.umls_api_key)");
    }
}

json RunConfig::to_json() const {
    return {
        {"dataset", dataset.empty() ? std::string() : fs::absolute(dataset).lexically_normal().string()},
        {"field", field},
        {"run_id", run_id},
        {"out", out.string()},
        {"mode", std::string(kgrank::to_string(mode))},
        {"cassettes", cassettes.string()},
        {"templates", templates.string()},
        {"parallelism", parallelism},
        {"kg",
         {{"source", std::string(kgrank::to_string(pipeline.kg_source))},
          {"fixtures", kg.fixtures.string()},
          {"cache_dir", kg.cache_dir.string()},
          {"retrieval_cap", pipeline.retrieval_cap},
          {"umls_url", kg.umls_url},
          {"umls_api_key", kg.umls_api_key.empty() ? "" : kRedacted},
          {"dbpedia_lookup_url", kg.dbpedia_lookup_url},
          {"dbpedia_sparql_url", kg.dbpedia_sparql_url}}},
        {"ranker",
         {{"strategy", std::string(kgrank::to_string(pipeline.strategy))},
          {"rerank", pipeline.rerank ? "on" : "off"},
          {"p", pipeline.selection.p},
          {"p_pre", pipeline.selection.p_pre},
          {"mmr", {{"w_base", pipeline.mmr_w_base}, {"delta", pipeline.mmr_delta}, {"full", pipeline.mmr_full}}}}},
        {"prompt", {{"template", pipeline.answer_template}, {"answer_hint", pipeline.answer_hint}}},
        {"providers",
         {{"embed", endpoint_json(embed)},
          {"cross", endpoint_json(cross)},
          {"llm", [&] {
               json j = endpoint_json(llm);
               j["temperature"] = pipeline.llm.temperature;
               j["max_tokens"] = pipeline.llm.max_tokens;
               return j;
           }()}}},
    };
}

}  // namespace kgrank::cli
