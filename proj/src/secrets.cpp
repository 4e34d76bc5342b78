#include "colloquy/secrets.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "http_url.hpp"

namespace colloquy::provider {

void InMemorySecretStore::put(std::string name, std::string value) {
    std::lock_guard lock(mutex_);
    values_[std::move(name)] = std::move(value);
}

std::size_t InMemorySecretStore::lookups() const {
    std::lock_guard lock(mutex_);
    return lookups_;
}

std::optional<std::string> InMemorySecretStore::get_secret(std::string_view name) {
    std::lock_guard lock(mutex_);
    ++lookups_;
    if (unreachable_) throw SecretError(SecretError::Kind::VaultUnreachable, "secret store unreachable");
    if (auto it = values_.find(name); it != values_.end()) return it->second;
    return std::nullopt;
}

HttpSecretStore::HttpSecretStore(std::string base_url, std::optional<std::string> token,
                                 std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), token_(std::move(token)), timeout_(timeout) {}

std::optional<std::string> HttpSecretStore::get_secret(std::string_view name) {
    auto url = detail::split_base_url(base_url_);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (token_) headers.emplace("Authorization", "Bearer " + *token_);

    auto res = client.Get(url.path_prefix + "/secrets/" + httplib::detail::encode_url(std::string(name)),
                          headers);
    if (!res) {
        throw SecretError(SecretError::Kind::VaultUnreachable,
                          "secret store unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status == 404) return std::nullopt;
    if (res->status != 200) {
        throw SecretError(SecretError::Kind::VaultUnreachable,
                          "secret store answered HTTP " + std::to_string(res->status));
    }
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (!body.is_object() || !body.contains("value") || !body["value"].is_string()) {
        throw SecretError(SecretError::Kind::VaultUnreachable, "secret store returned a malformed body");
    }
    return body["value"].get<std::string>();
}

EnvLookup process_environment() {
    return [](std::string_view name) -> std::optional<std::string> {
        const char* value = std::getenv(std::string(name).c_str());
        if (value == nullptr || *value == '\0') return std::nullopt;
        return std::string(value);
    };
}

Secret resolve_api_key(const EnvLookup& env, SecretStore* vault, std::string_view env_name,
                       std::string_view secret_name, const LogSink& log) {
    if (env) {
        if (auto value = env(env_name); value && !value->empty()) {
            if (log) log("API key taken from environment variable " + std::string(env_name));
            return Secret(std::move(*value));
        }
    }
    if (vault != nullptr) {
        if (log) log("API key not in environment; querying secret store for " + std::string(secret_name));
        if (auto value = vault->get_secret(secret_name); value && !value->empty()) {
            if (log) log("API key taken from secret store");
            return Secret(std::move(*value));
        }
    }
    throw SecretError(SecretError::Kind::NotFound,
                      "no API key in $" + std::string(env_name) + (vault ? " or the secret store" : ""));
}

}  // namespace colloquy::provider
