#include "colloquy/provider.hpp"

#include <cmath>
#include <thread>

#include <openssl/evp.h>

namespace colloquy::provider {

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view text) {
    if (text == "system") return Role::System;
    if (text == "user") return Role::User;
    if (text == "assistant") return Role::Assistant;
    throw std::invalid_argument("unknown message role '" + std::string(text) + "'");
}

std::string_view to_string(FinishReason reason) noexcept {
    switch (reason) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(std::string_view text) noexcept {
    if (text == "stop") return FinishReason::Stop;
    if (text == "length") return FinishReason::Length;
    return FinishReason::Error;
}

std::string_view to_string(ProviderError::Kind kind) noexcept {
    switch (kind) {
        case ProviderError::Kind::RateLimited: return "RateLimited";
        case ProviderError::Kind::Timeout: return "Timeout";
        case ProviderError::Kind::BadResponse: return "BadResponse";
        case ProviderError::Kind::RetriesExhausted: return "RetriesExhausted";
    }
    return "BadResponse";
}

bool ProviderError::transient() const noexcept {
    switch (kind_) {
        case Kind::RateLimited:
        case Kind::Timeout:
            return true;
        case Kind::BadResponse:
            return status_ >= 500;
        case Kind::RetriesExhausted:
            return false;
    }
    return false;
}

void check(const CompletionRequest& request) {
    if (request.messages.empty()) throw std::invalid_argument("request has no messages");
    if (request.messages.front().role != Role::System) {
        throw std::invalid_argument("first message must have role system");
    }
    if (request.model_id.empty()) throw std::invalid_argument("request has no model id");
    persona::check(request.decoding);
}

nlohmann::json to_wire_body(const CompletionRequest& request) {
    auto messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    const auto& d = request.decoding;
    return {{"model", request.model_id},
            {"messages", std::move(messages)},
            {"temperature", d.temperature},
            {"top_p", d.top_p},
            {"presence_penalty", d.presence_penalty},
            {"frequency_penalty", d.frequency_penalty},
            {"max_tokens", d.max_tokens}};
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::string canonical_request_bytes(const CompletionRequest& request) {
    // nlohmann::json objects are std::map backed, so keys serialize sorted.
    auto messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"content", normalize_whitespace(m.content)}, {"role", to_string(m.role)}});
    }
    const auto& d = request.decoding;
    nlohmann::json doc = {{"decoding",
                           {{"frequency_penalty", d.frequency_penalty},
                            {"max_tokens", d.max_tokens},
                            {"presence_penalty", d.presence_penalty},
                            {"temperature", d.temperature},
                            {"top_p", d.top_p}}},
                          {"messages", std::move(messages)},
                          {"model", request.model_id}};
    return doc.dump();
}

std::string CacheKey::hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (auto b : digest) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
    }
    return out;
}

CacheKey cache_key(const CompletionRequest& request) {
    const std::string bytes = canonical_request_bytes(request);
    CacheKey key;
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), key.digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != key.digest.size()) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    return key;
}

void real_sleep(std::chrono::milliseconds d) {
    if (d.count() > 0) std::this_thread::sleep_for(d);
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry, std::mt19937_64& rng) const {
    double full = static_cast<double>(base_delay.count()) * std::pow(factor, retry - 1);
    if (jitter > 0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        full *= (1.0 - jitter) + jitter * unit(rng);
    }
    return std::chrono::milliseconds(static_cast<std::int64_t>(full));
}

ChatClient::ChatClient(std::shared_ptr<Backend> backend, ClientOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      in_flight_(std::max<std::ptrdiff_t>(1, options_.max_in_flight)),
      rng_(options_.jitter_seed) {
    if (!backend_) throw std::invalid_argument("ChatClient needs a backend");
    if (!options_.sleep) options_.sleep = real_sleep;
}

CompletionResult ChatClient::complete(const CompletionRequest& request) {
    check(request);
    const auto started = std::chrono::steady_clock::now();
    const int max_attempts = std::max(0, options_.retry.limit) + 1;

    for (int attempt = 1;; ++attempt) {
        try {
            BackendReply reply;
            {
                in_flight_.acquire();
                struct Release {
                    std::counting_semaphore<>& s;
                    ~Release() { s.release(); }
                } release{in_flight_};
                reply = backend_->call(request);
            }
            CompletionResult result;
            result.content = std::move(reply.content);
            result.finish_reason = reply.finish_reason;
            result.attempt_count = attempt;
            result.provider_latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            return result;
        } catch (ProviderError& e) {
            e.set_attempt_count(attempt);
            if (!e.transient()) throw;
            if (attempt >= max_attempts) {
                ProviderError exhausted(ProviderError::Kind::RetriesExhausted,
                                        "retries exhausted after " + std::to_string(attempt) +
                                            " attempts: " + e.what(),
                                        e.status());
                exhausted.set_attempt_count(attempt);
                exhausted.set_last_kind(e.kind());
                throw exhausted;
            }
            std::chrono::milliseconds delay;
            {
                std::lock_guard lock(rng_mutex_);
                delay = options_.retry.delay_for(attempt, rng_);
            }
            if (options_.log) {
                options_.log("attempt " + std::to_string(attempt) + " failed (" +
                             std::string(to_string(e.kind())) + "), retrying in " +
                             std::to_string(delay.count()) + " ms");
            }
            options_.sleep(delay);
        }
    }
}

}  // namespace colloquy::provider
