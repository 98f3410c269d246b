#pragma once

#include <stdexcept>
#include <string>

namespace kgrank {

/// Root of every error the engine raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition or invalid value supplied by the caller.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Network-level failure or rate limiting. Safe to retry.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, int status = 0)
        : Error(what), status_(status) {}

    /// HTTP status when one was received, 0 for connection failures.
    int status() const noexcept { return status_; }
    bool rate_limited() const noexcept { return status_ == 429; }

private:
    int status_;
};

/// A peer answered, but the payload breaks the wire contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A provider answered with an application-level failure.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// The LLM returned no text.
class EmptyCompletionError : public ProviderError {
public:
    EmptyCompletionError() : ProviderError("provider returned an empty completion") {}
};

/// Replay of a request that was never recorded.
class CassetteMiss : public Error {
public:
    using Error::Error;
};

/// The backend does not know the requested entity, or a fixture is missing.
class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace kgrank
