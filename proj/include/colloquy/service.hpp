#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "colloquy/analysis.hpp"
#include "colloquy/orchestrator.hpp"
#include "colloquy/persistence.hpp"
#include "colloquy/secrets.hpp"

namespace httplib {
class Server;
}

namespace colloquy::service {

using orchestrator::DebateEvent;

/// Full per-debate event history with blocking reads for live subscribers.
class EventLog {
public:
    void append(DebateEvent event);
    /// Events with sequence >= from, in order.
    std::vector<DebateEvent> since(std::uint64_t from) const;
    /// Waits until an event with sequence >= from exists, the log is closed,
    /// or the timeout passes. Returns whether such an event exists.
    bool wait_for(std::uint64_t from, std::chrono::milliseconds timeout) const;
    /// No further events will arrive.
    void close();
    bool closed() const;
    std::uint64_t size() const;

private:
    mutable std::mutex mutex_;
    mutable std::condition_variable grew_;
    std::vector<DebateEvent> events_;
    bool closed_ = false;
};

/// Formats one event as a server-sent-events frame.
std::string sse_frame(const DebateEvent& event);

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ServiceOptions {
    /// Builds the provider stack for a new debate.
    std::function<std::shared_ptr<provider::Completer>(const DebateConfig&)> completer_factory;
    std::vector<analysis::KeywordSet> keywords;
    /// When set, each debate's transcript files go to <output_dir>/<debate id>/.
    std::optional<std::filesystem::path> output_dir;
    /// Overrides the configured inter-turn delay for every debate.
    std::optional<std::chrono::milliseconds> delay_override;
};

/// Owns live debates, their event logs and worker threads.
class DebateService {
public:
    explicit DebateService(ServiceOptions options);
    ~DebateService();

    DebateService(const DebateService&) = delete;
    DebateService& operator=(const DebateService&) = delete;

    orchestrator::PersonaRegistry& personas() noexcept { return personas_; }

    /// Throws InvalidConfig or orchestrator::UnknownPersona. A repeated
    /// idempotency key returns the id created the first time.
    std::string create_debate(const nlohmann::json& config_doc,
                              const std::optional<std::string>& idempotency_key = std::nullopt);

    /// Start launches the debate on a worker thread. Throws NotFound,
    /// orchestrator::IllegalTransition or std::invalid_argument.
    Phase post_command(const std::string& id, const orchestrator::Command& command);

    std::shared_ptr<orchestrator::Debate> debate(const std::string& id) const;
    std::shared_ptr<EventLog> events(const std::string& id) const;
    std::vector<std::string> debate_ids() const;

    analysis::FrequencyReport get_analysis(const std::string& id) const;
    std::vector<analysis::Excerpt> get_excerpts(const std::string& id, int limit) const;
    const std::vector<analysis::KeywordSet>& keywords() const noexcept { return options_.keywords; }

    /// Path of the canonical record, when an output directory is configured.
    std::optional<std::filesystem::path> canonical_path(const std::string& id) const;

    /// Ends every unfinished debate and joins the workers.
    void shutdown();

private:
    struct Entry {
        std::shared_ptr<orchestrator::Debate> debate;
        std::shared_ptr<EventLog> events;
        std::shared_ptr<persistence::TranscriptRecorder> recorder;
        std::thread worker;
    };

    Entry& entry(const std::string& id);
    const Entry& entry(const std::string& id) const;

    ServiceOptions options_;
    orchestrator::PersonaRegistry personas_;
    mutable std::mutex mutex_;
    std::map<std::string, std::unique_ptr<Entry>> debates_;
    std::map<std::string, std::string> idempotency_;
};

struct BackendSettings {
    bool mock = false;
    std::optional<std::string> base_url;
    std::optional<std::string> vault_url;
    std::optional<std::string> vault_token;
};

/// Reads COLLOQUY_MOCK, COLLOQUY_BASE_URL, COLLOQUY_VAULT_URL and
/// COLLOQUY_VAULT_TOKEN.
BackendSettings settings_from_environment(const provider::EnvLookup& env);

/// The deterministic mock, or an OpenAI-compatible client whose key comes
/// from OPENAI_API_KEY and then the configured vault.
std::shared_ptr<provider::Backend> make_backend(const BackendSettings& settings, const provider::EnvLookup& env,
                                                const provider::LogSink& log = {});

/// Registers the HTTP routes on `server`:
///   POST /debates, GET /debates, GET /debates/{id},
///   POST /debates/{id}/commands, GET /debates/{id}/events?from=<seq> (SSE),
///   GET /debates/{id}/transcript, GET /debates/{id}/analysis,
///   GET /personas, POST /personas
void install_routes(httplib::Server& server, DebateService& service);

}  // namespace colloquy::service
