#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "colloquy/provider.hpp"

namespace colloquy::provider {

/// An API key. Streams as "***"; the value is only reachable via reveal().
class Secret {
public:
    explicit Secret(std::string value) : value_(std::move(value)) {}

    const std::string& reveal() const noexcept { return value_; }

    friend std::ostream& operator<<(std::ostream& os, const Secret&) { return os << "***"; }

private:
    std::string value_;
};

class SecretError : public std::runtime_error {
public:
    enum class Kind { NotFound, VaultUnreachable };

    SecretError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// A managed secret store. get_secret returns nullopt when the store has no
/// such secret and throws SecretError{VaultUnreachable} when it cannot be
/// asked.
class SecretStore {
public:
    virtual ~SecretStore() = default;
    virtual std::optional<std::string> get_secret(std::string_view name) = 0;
};

class InMemorySecretStore final : public SecretStore {
public:
    void put(std::string name, std::string value);
    void set_unreachable(bool unreachable) { unreachable_ = unreachable; }
    std::size_t lookups() const;

    std::optional<std::string> get_secret(std::string_view name) override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string, std::less<>> values_;
    bool unreachable_ = false;
    std::size_t lookups_ = 0;
};

/// Vault reached over HTTP: GET <base_url>/secrets/<name> answering
/// {"value": "..."}; 404 means absent. An optional bearer token is sent.
class HttpSecretStore final : public SecretStore {
public:
    explicit HttpSecretStore(std::string base_url, std::optional<std::string> token = std::nullopt,
                             std::chrono::seconds timeout = std::chrono::seconds(5));

    std::optional<std::string> get_secret(std::string_view name) override;

private:
    std::string base_url_;
    std::optional<std::string> token_;
    std::chrono::seconds timeout_;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

/// getenv-backed lookup; empty values count as unset.
EnvLookup process_environment();

inline constexpr std::string_view kApiKeyEnvVar = "OPENAI_API_KEY";

/// Environment first, then the vault (when one is configured).
Secret resolve_api_key(const EnvLookup& env, SecretStore* vault,
                       std::string_view env_name = kApiKeyEnvVar,
                       std::string_view secret_name = kApiKeyEnvVar, const LogSink& log = {});

}  // namespace colloquy::provider
