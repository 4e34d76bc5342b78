#pragma once

#include <chrono>
#include <string>

#include "colloquy/provider.hpp"
#include "colloquy/secrets.hpp"

namespace colloquy::provider {

struct OpenAIBackendOptions {
    /// Scheme, host and optional path prefix; "/v1/chat/completions" is appended.
    std::string base_url = "https://api.openai.com";
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{60};
};

/// Speaks the OpenAI-compatible chat-completions wire format.
///   429          -> RateLimited
///   no response  -> Timeout
///   other non-2xx or unparsable body -> BadResponse(status)
class OpenAIBackend final : public Backend {
public:
    OpenAIBackend(Secret api_key, OpenAIBackendOptions options = {});

    BackendReply call(const CompletionRequest& request) override;

    /// Extracts the first choice of a response body.
    static BackendReply parse_response(const std::string& body, int status);

private:
    Secret api_key_;
    OpenAIBackendOptions options_;
};

}  // namespace colloquy::provider
