#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgrank {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Attempts include the first call. Backoff doubles after every failed attempt.
struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    /// Injected so tests do not sleep; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Thin blocking client over one base URL (scheme://host[:port][/prefix]).
/// Stateless between calls, so one instance may be shared across threads.
class HttpClient {
public:
    explicit HttpClient(std::string base_url,
                        std::chrono::seconds timeout = std::chrono::seconds(120));

    /// Throws TransportError when no response arrives.
    HttpResponse post_json(std::string_view path, const std::string& body,
                           const HttpHeaders& headers = {}) const;
    HttpResponse get(std::string_view path_and_query, const HttpHeaders& headers = {}) const;

    const std::string& base_url() const noexcept { return base_url_; }

private:
    std::string base_url_;
    std::string origin_;
    std::string prefix_;
    std::chrono::seconds timeout_;
};

/// Re-issues `send` on TransportError and on HTTP 429. Returns the first
/// other response; throws TransportError once attempts run out.
HttpResponse send_with_retry(const RetryPolicy& policy,
                             const std::function<HttpResponse()>& send);

std::string url_encode(std::string_view text);

}  // namespace kgrank
