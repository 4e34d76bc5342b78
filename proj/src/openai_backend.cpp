#include "colloquy/openai_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include "http_url.hpp"

namespace colloquy::provider {

OpenAIBackend::OpenAIBackend(Secret api_key, OpenAIBackendOptions options)
    : api_key_(std::move(api_key)), options_(std::move(options)) {
    detail::split_base_url(options_.base_url);  // validate early
}

BackendReply OpenAIBackend::parse_response(const std::string& body, int status) {
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ProviderError(ProviderError::Kind::BadResponse, "response body is not JSON", status);
    }
    const auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        throw ProviderError(ProviderError::Kind::BadResponse, "response has no choices", status);
    }
    const auto& first = (*choices)[0];
    const auto message = first.find("message");
    if (message == first.end() || !message->is_object() || !message->contains("content")) {
        throw ProviderError(ProviderError::Kind::BadResponse, "first choice has no message content", status);
    }
    BackendReply reply;
    const auto& content = (*message)["content"];
    reply.content = content.is_string() ? content.get<std::string>() : std::string{};
    const auto reason = first.find("finish_reason");
    reply.finish_reason = (reason != first.end() && reason->is_string())
                              ? finish_reason_from_string(reason->get<std::string>())
                              : FinishReason::Stop;
    return reply;
}

BackendReply OpenAIBackend::call(const CompletionRequest& request) {
    auto url = detail::split_base_url(options_.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    client.set_bearer_token_auth(api_key_.reveal());

    auto res = client.Post(url.path_prefix + "/v1/chat/completions", to_wire_body(request).dump(),
                           "application/json");
    if (!res) {
        throw ProviderError(ProviderError::Kind::Timeout,
                            "no response from provider: " + httplib::to_string(res.error()));
    }
    if (res->status == 429) {
        throw ProviderError(ProviderError::Kind::RateLimited, "provider rate limited the request", 429);
    }
    if (res->status == 408) {
        throw ProviderError(ProviderError::Kind::Timeout, "provider reported a request timeout", 408);
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(ProviderError::Kind::BadResponse,
                            "provider answered HTTP " + std::to_string(res->status), res->status);
    }
    return parse_response(res->body, res->status);
}

}  // namespace colloquy::provider
