#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "kgrank/pipeline.hpp"
#include "kgrank/provider_factory.hpp"

namespace kgrank::cli {

/// Values given on the command line. Unset members defer to the config
/// file, then to the environment, then to built-in defaults.
struct RunFlags {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::string> field;
    std::optional<std::string> strategy;
    std::optional<bool> rerank;
    std::optional<std::size_t> p;
    std::optional<std::size_t> p_pre;
    std::optional<double> mmr_w_base;
    std::optional<double> mmr_delta;
    std::optional<std::string> kg;
    std::optional<std::string> mode;
    std::optional<std::filesystem::path> cassettes;
    std::optional<std::filesystem::path> kg_fixtures;
    std::optional<std::filesystem::path> kg_cache;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> templates;
    std::optional<std::string> run_id;
    std::optional<std::size_t> parallelism;
};

struct KgSettings {
    std::filesystem::path fixtures;
    std::filesystem::path cache_dir = ".kgrank-cache";
    /// http(s) base URL, or mock:graph=<path> for an in-memory graph.
    std::string umls_url = "https://uts-ws.nlm.nih.gov";
    std::string umls_api_key;
    std::string dbpedia_lookup_url = "https://lookup.dbpedia.org";
    std::string dbpedia_sparql_url = "https://dbpedia.org";
};

/// Fully resolved settings for one run.
struct RunConfig {
    std::filesystem::path dataset;
    std::string field;
    std::string run_id;
    std::filesystem::path out = "runs";
    ProviderMode mode = ProviderMode::live;
    std::filesystem::path cassettes;
    std::filesystem::path templates;
    std::size_t parallelism = 1;
    KgSettings kg;
    PipelineConfig pipeline;
    EndpointConfig embed;
    EndpointConfig cross;
    EndpointConfig llm;

    std::filesystem::path run_dir() const { return out / run_id; }

    /// Same layout as the config file. API keys are redacted.
    nlohmann::json to_json() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the real process environment.
std::optional<std::string> process_env(const std::string& name);

/// Merges flags > config file > environment > defaults. Relative paths in
/// the config file resolve against the file's directory. Throws ConfigError.
RunConfig resolve_run_config(const RunFlags& flags, const EnvLookup& env = process_env);

/// Checks everything that can be checked before any network call:
/// dataset presence, mode prerequisites, numeric ranges.
void validate_run_config(const RunConfig& config);

}  // namespace kgrank::cli
