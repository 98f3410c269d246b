#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kgrank/errors.hpp"
#include "kgrank/kg_types.hpp"
#include "kgrank/providers.hpp"
#include "kgrank/ranker.hpp"

namespace kgrank::testing {

inline std::filesystem::path fixture_dir() { return KGRANK_FIXTURE_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("kgrank-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// httplib server on an ephemeral localhost port, listening on its own thread.
class LocalServer {
public:
    LocalServer() = default;
    ~LocalServer() { stop(); }

    httplib::Server& server() { return server_; }

    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

/// Completer driven by a callback; counts calls.
class FnCompleter final : public Completer {
public:
    explicit FnCompleter(std::function<std::string(const CompletionRequest&)> fn) : fn_(std::move(fn)) {}

    int calls() const { return calls_.load(); }
    std::vector<std::string> prompts() const {
        std::lock_guard lock(mu_);
        return prompts_;
    }

protected:
    std::string do_complete(const CompletionRequest& request) override {
        ++calls_;
        {
            std::lock_guard lock(mu_);
            prompts_.push_back(request.prompt);
        }
        return fn_(request);
    }

private:
    std::function<std::string(const CompletionRequest&)> fn_;
    std::atomic<int> calls_{0};
    mutable std::mutex mu_;
    std::vector<std::string> prompts_;
};

/// Cross scorer driven by a per-passage callback.
class FnScorer final : public CrossScorer {
public:
    explicit FnScorer(std::function<double(std::string_view, const std::string&)> fn) : fn_(std::move(fn)) {}
    std::string model_id() const override { return "fn-scorer"; }

protected:
    std::vector<double> do_cross_score(std::string_view query, std::span<const std::string> passages) override {
        std::vector<double> out;
        for (const auto& p : passages) out.push_back(fn_(query, p));
        return out;
    }

private:
    std::function<double(std::string_view, const std::string&)> fn_;
};

/// Embedder with a fixed text -> vector table; unknown texts are an error.
class TableEmbedder final : public Embedder {
public:
    explicit TableEmbedder(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
    std::string model_id() const override { return "table"; }
    std::vector<std::string> seen() const {
        std::lock_guard lock(mu_);
        return seen_;
    }

protected:
    std::vector<Vector> do_embed(std::span<const std::string> texts) override {
        std::vector<Vector> out;
        for (const auto& t : texts) {
            {
                std::lock_guard lock(mu_);
                seen_.push_back(t);
            }
            auto it = table_.find(t);
            if (it == table_.end()) throw ProviderError("table embedder: unknown text '" + t + "'");
            out.emplace_back(it->second);
        }
        return out;
    }

private:
    std::map<std::string, std::vector<double>> table_;
    mutable std::mutex mu_;
    std::vector<std::string> seen_;
};

inline ConceptRef umls(const std::string& id, const std::string& name) {
    return ConceptRef(id, name, KgSource::umls);
}

/// Triple i: ("H<i>", "rel_<i>", "T<i>"), unique per index.
inline Triple numbered_triple(std::size_t i) {
    const auto s = std::to_string(i);
    return Triple(umls("CH" + s, "H" + s), "rel_" + s, umls("CT" + s, "T" + s));
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        std::vector<double> v(dim);
        double norm = 0.0;
        for (auto& x : v) {
            x = normal(rng);
            norm += x * x;
        }
        if (norm > 1e-12) return Vector(std::move(v));
    }
}

/// n candidates of the given dim. With `duplicates`, some embeddings repeat
/// earlier ones so exact ties occur.
inline std::vector<Candidate> random_candidates(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                                bool duplicates = false) {
    std::vector<Candidate> out;
    std::uniform_int_distribution<int> coin(0, 3);
    for (std::size_t i = 0; i < n; ++i) {
        if (duplicates && i > 0 && coin(rng) == 0) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            out.push_back(Candidate{numbered_triple(i), out[pick(rng)].embedding});
        } else {
            out.push_back(Candidate{numbered_triple(i), random_vector(rng, dim)});
        }
    }
    return out;
}

}  // namespace kgrank::testing
