#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "colloquy/persona.hpp"

namespace colloquy::provider {

using persona::DecodingParams;

enum class Role { System, User, Assistant };

std::string_view to_string(Role role) noexcept;
Role role_from_string(std::string_view text);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Attribution carried alongside a request. Never serialized to the wire
/// and not part of the cache key.
struct RequestTags {
    std::string speaker;
    int turn_index = 0;
};

struct CompletionRequest {
    std::string model_id = "gpt-3.5-turbo";
    std::vector<ChatMessage> messages;
    DecodingParams decoding;
    RequestTags tags;
};

/// Throws std::invalid_argument unless the request has at least one message,
/// starts with a system message, and carries valid decoding parameters.
void check(const CompletionRequest& request);

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason reason) noexcept;
FinishReason finish_reason_from_string(std::string_view text) noexcept;

struct CompletionResult {
    std::string content;
    FinishReason finish_reason = FinishReason::Stop;
    std::chrono::milliseconds provider_latency{0};
    int attempt_count = 1;

    friend bool operator==(const CompletionResult&, const CompletionResult&) = default;
};

class ProviderError : public std::runtime_error {
public:
    enum class Kind { RateLimited, Timeout, BadResponse, RetriesExhausted };

    ProviderError(Kind kind, std::string message, int status = 0)
        : std::runtime_error(std::move(message)), kind_(kind), status_(status) {}

    Kind kind() const noexcept { return kind_; }
    /// HTTP status when one was received, otherwise 0.
    int status() const noexcept { return status_; }

    /// Rate limits, timeouts and 5xx responses are worth retrying.
    bool transient() const noexcept;

    int attempt_count() const noexcept { return attempt_count_; }
    void set_attempt_count(int n) noexcept { attempt_count_ = n; }

    /// For RetriesExhausted: the kind of the final failed attempt.
    std::optional<Kind> last_kind() const noexcept { return last_kind_; }
    void set_last_kind(Kind k) noexcept { last_kind_ = k; }

private:
    Kind kind_;
    int status_;
    int attempt_count_ = 0;
    std::optional<Kind> last_kind_;
};

std::string_view to_string(ProviderError::Kind kind) noexcept;

// -- wire format and cache keys ------------------------------------------------

/// Body of POST /v1/chat/completions.
nlohmann::json to_wire_body(const CompletionRequest& request);

/// Trims and collapses every whitespace run to one space.
std::string normalize_whitespace(std::string_view text);

/// Compact JSON with sorted field names over (model, normalized messages,
/// decoding fields). Input to the cache digest.
std::string canonical_request_bytes(const CompletionRequest& request);

struct CacheKey {
    std::array<std::uint8_t, 32> digest{};

    std::string hex() const;
    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

/// SHA-256 of canonical_request_bytes.
CacheKey cache_key(const CompletionRequest& request);

// -- backends ------------------------------------------------------------------

struct BackendReply {
    std::string content;
    FinishReason finish_reason = FinishReason::Stop;
};

/// One wire call, no retries. Failures are reported as ProviderError.
class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendReply call(const CompletionRequest& request) = 0;
};

/// Anything that turns a request into a result (a client, a cache in front
/// of a client, ...).
class Completer {
public:
    virtual ~Completer() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using LogSink = std::function<void(std::string_view)>;

void real_sleep(std::chrono::milliseconds d);

struct RetryPolicy {
    int limit = 3;
    std::chrono::milliseconds base_delay{500};
    double factor = 2.0;
    /// Fraction of each delay that is randomized; 0 disables jitter.
    double jitter = 0.5;

    /// Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay_for(int retry, std::mt19937_64& rng) const;
};

struct ClientOptions {
    RetryPolicy retry;
    std::ptrdiff_t max_in_flight = 4;
    Sleeper sleep = real_sleep;
    LogSink log;
    std::uint64_t jitter_seed = 0x5eed;
};

/// Retrying client over a Backend. Safe to share between threads; at most
/// `max_in_flight` backend calls run at once.
class ChatClient final : public Completer {
public:
    explicit ChatClient(std::shared_ptr<Backend> backend, ClientOptions options = {});

    CompletionResult complete(const CompletionRequest& request) override;

    const ClientOptions& options() const noexcept { return options_; }

private:
    std::shared_ptr<Backend> backend_;
    ClientOptions options_;
    std::counting_semaphore<> in_flight_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

}  // namespace colloquy::provider
