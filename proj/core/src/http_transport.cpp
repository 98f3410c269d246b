#include "kgrank/http_transport.hpp"

#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "kgrank/errors.hpp"

namespace kgrank {

namespace {

httplib::Headers to_httplib(const HttpHeaders& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
}

HttpResponse unwrap(const httplib::Result& result, const std::string& url) {
    if (!result) {
        throw TransportError(fmt::format("request to {} failed: {}", url,
                                         httplib::to_string(result.error())));
    }
    return HttpResponse{result->status, result->body};
}

}  // namespace

HttpClient::HttpClient(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError(fmt::format("'{}' is not an http(s) URL", base_url_));
    }
    auto scheme = base_url_.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ValidationError(fmt::format("unsupported URL scheme in '{}'", base_url_));
    }
    auto path_start = base_url_.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        origin_ = base_url_;
    } else {
        origin_ = base_url_.substr(0, path_start);
        prefix_ = base_url_.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
}

HttpResponse HttpClient::post_json(std::string_view path, const std::string& body,
                                   const HttpHeaders& headers) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    std::string full = prefix_ + std::string(path);
    return unwrap(client.Post(full, to_httplib(headers), body, "application/json"),
                  origin_ + full);
}

HttpResponse HttpClient::get(std::string_view path_and_query, const HttpHeaders& headers) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    std::string full = prefix_ + std::string(path_and_query);
    return unwrap(client.Get(full, to_httplib(headers)), origin_ + full);
}

HttpResponse send_with_retry(const RetryPolicy& policy,
                             const std::function<HttpResponse()>& send) {
    const int attempts = std::max(policy.max_attempts, 1);
    auto backoff = policy.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            HttpResponse response = send();
            if (response.status != 429) return response;
            last_error = "rate limited (HTTP 429)";
        } catch (const TransportError& e) {
            last_error = e.what();
        }
        if (attempt == attempts) break;
        if (policy.sleep) {
            policy.sleep(backoff);
        } else {
            std::this_thread::sleep_for(backoff);
        }
        backoff *= 2;
    }
    throw TransportError(fmt::format("giving up after {} attempts: {}", attempts, last_error));
}

std::string url_encode(std::string_view text) {
    std::string out;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out;
}

}  // namespace kgrank
