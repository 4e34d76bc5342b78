#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "colloquy/cache.hpp"
#include "colloquy/persona.hpp"
#include "colloquy/provider.hpp"
#include "colloquy/transcript.hpp"

namespace colloquy::orchestrator {

/// Thread-safe set of validated personas, keyed by id.
class PersonaRegistry {
public:
    /// Replaces any persona with the same id.
    void add(persona::PersonaSpec spec);
    std::optional<persona::PersonaSpec> find(const PersonaId& id) const;
    std::vector<persona::PersonaSpec> list() const;

private:
    mutable std::mutex mutex_;
    std::map<PersonaId, persona::PersonaSpec> personas_;
};

class UnknownPersona : public std::invalid_argument {
public:
    explicit UnknownPersona(PersonaId id)
        : std::invalid_argument("unknown persona '" + id.value + "'"), id_(std::move(id)) {}
    const PersonaId& id() const noexcept { return id_; }

private:
    PersonaId id_;
};

enum class CommandKind { Start, Pause, Resume, Inject, End };

std::string_view to_string(CommandKind kind) noexcept;
CommandKind command_from_string(std::string_view text);

struct Command {
    CommandKind kind = CommandKind::Start;
    std::string text;  // Inject only

    static Command start() { return {CommandKind::Start, {}}; }
    static Command pause() { return {CommandKind::Pause, {}}; }
    static Command resume() { return {CommandKind::Resume, {}}; }
    static Command end() { return {CommandKind::End, {}}; }
    static Command inject(std::string text) { return {CommandKind::Inject, std::move(text)}; }
};

class IllegalTransition : public std::logic_error {
public:
    IllegalTransition(Phase phase, CommandKind command)
        : std::logic_error(std::string("cannot ") + std::string(to_string(command)) + " a debate that is " +
                           std::string(to_string(phase))),
          phase_(phase),
          command_(command) {}

    Phase phase() const noexcept { return phase_; }
    CommandKind command() const noexcept { return command_; }

private:
    Phase phase_;
    CommandKind command_;
};

struct InjectedStimulus {
    std::string text;
    int injected_at_turn = 0;
    std::string author = "human";

    friend bool operator==(const InjectedStimulus&, const InjectedStimulus&) = default;
};

enum class EventKind { TurnCompleted, PhaseChanged, StimulusInjected, Error };

std::string_view to_string(EventKind kind) noexcept;

/// Emitted by a debate in state order; sequence numbers are dense from 0.
struct DebateEvent {
    std::string debate_id;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::PhaseChanged;
    /// Phase at emission time.
    Phase phase = Phase::Created;
    nlohmann::json payload;
};

nlohmann::json to_json(const DebateEvent& event);

/// Even indices go to config.personas[0], odd ones to config.personas[1].
const PersonaId& speaker_for(int index, const DebateConfig& config);

/// Point-in-time copy of a debate.
struct DebateState {
    std::string id;
    DebateConfig config;
    Phase phase = Phase::Created;
    std::vector<Turn> turns;
    std::vector<InjectedStimulus> pending_stimuli;
    int next_turn_index = 0;
    std::vector<LogEntry> events;
};

struct DebateHooks {
    /// Called with the debate lock held; must not call back into the debate.
    std::function<void(const DebateEvent&)> on_event;
    /// Called with the debate lock held after every turn and terminal phase change.
    std::function<void(const TranscriptDocument&)> on_checkpoint;
    /// Every compiled request, once per turn, before the provider call.
    std::function<void(const provider::CompletionRequest&)> on_prompt;
    /// Called by run() after each turn, without the lock. May issue commands.
    std::function<void(const Turn&)> after_turn;
};

struct DebateServices {
    std::shared_ptr<provider::Completer> completer;
    std::function<Timestamp()> clock = now_ms;
};

/// One guided conversation between two personas. All methods are safe to
/// call from any thread; state changes are serialized by an internal lock and
/// at most one provider call is in flight.
class Debate {
public:
    enum class StepOutcome { TurnCompleted, Idle, Finished };

    Debate(std::string id, DebateConfig config, std::array<persona::PersonaSpec, 2> personas,
           DebateServices services, DebateHooks hooks);

    Debate(const Debate&) = delete;
    Debate& operator=(const Debate&) = delete;

    const std::string& id() const noexcept { return id_; }
    const DebateConfig& config() const noexcept { return config_; }
    const persona::CompiledPrompt& system_prompt(const PersonaId& id) const;

    Phase phase() const;
    DebateState snapshot() const;
    TranscriptDocument document() const;
    /// Why the debate failed, if it did.
    std::optional<std::string> failure() const;
    /// Provider invocations so far (each may retry internally).
    std::size_t provider_calls() const noexcept { return provider_calls_.load(); }

    /// Throws IllegalTransition, or std::invalid_argument for an empty Inject.
    void apply_command(const Command& command);

    /// Produces one turn. Requires phase Running and an unexhausted budget
    /// (std::logic_error otherwise). Provider failures move the debate to
    /// Failed and are rethrown.
    Turn next_turn();

    /// Advances by at most one turn without blocking: Idle while Created or
    /// Paused, Finished once Ended or Failed.
    StepOutcome step();

    /// Starts the debate if needed, then produces turns until the budget
    /// (default: config.total_turns) is spent, End is received, or the
    /// provider fails. Blocks while Paused. Returns the transcript.
    std::vector<Turn> run(std::optional<int> budget = std::nullopt);

    /// Blocks until the phase is Ended or Failed.
    void wait_until_finished() const;

private:
    void transition(Phase to, std::string_view log_kind, std::string text);
    void emit(EventKind kind, nlohmann::json payload);
    void log(std::string kind, std::string text);
    void checkpoint();
    TranscriptDocument document_locked() const;
    provider::CompletionRequest build_request(int index, const PersonaId& speaker);
    Turn advance(std::unique_lock<std::mutex>& lock);
    void wait_between_turns(std::unique_lock<std::mutex>& lock);
    const persona::PersonaSpec& persona_spec(const PersonaId& id) const;

    const std::string id_;
    const DebateConfig config_;
    const std::array<persona::PersonaSpec, 2> personas_;
    const std::array<persona::CompiledPrompt, 2> prompts_;
    DebateServices services_;
    DebateHooks hooks_;

    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    Phase phase_ = Phase::Created;
    std::vector<Turn> turns_;
    std::deque<InjectedStimulus> pending_;
    std::vector<LogEntry> log_;
    int budget_;
    bool in_flight_ = false;
    std::uint64_t next_sequence_ = 0;
    std::optional<std::string> failure_;
    Timestamp started_at_;
    std::optional<Timestamp> ended_at_;
    std::atomic<std::size_t> provider_calls_{0};
};

/// Builds a retrying client honoring config.retry_limit, optionally behind
/// a response cache.
std::shared_ptr<provider::Completer> make_completer(const DebateConfig& config,
                                                    std::shared_ptr<provider::Backend> backend,
                                                    provider::ClientOptions options = {},
                                                    std::shared_ptr<provider::ResponseCache> cache = nullptr);

/// Resolves both personas and returns a debate in phase Created. If the
/// opening speaker is listed second, the pair is swapped so that it speaks
/// at index 0. Throws UnknownPersona or std::invalid_argument.
std::shared_ptr<Debate> new_debate(DebateConfig config, const PersonaRegistry& registry,
                                   DebateServices services, DebateHooks hooks = {}, std::string id = {});

std::string random_debate_id();

}  // namespace colloquy::orchestrator
