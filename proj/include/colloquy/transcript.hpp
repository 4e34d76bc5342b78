#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "colloquy/persona.hpp"
#include "colloquy/provider.hpp"

namespace colloquy {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_ms();

/// "2024-03-01T12:00:00.250Z"
std::string format_iso8601(Timestamp t);
/// Inverse of format_iso8601 (the fractional part is optional).
Timestamp parse_iso8601(std::string_view text);
/// "20240301T120000Z"
std::string format_compact_utc(Timestamp t);

enum class Phase { Created, Running, Paused, Ended, Failed };

std::string_view to_string(Phase phase) noexcept;
Phase phase_from_string(std::string_view text);

struct DebateConfig {
    /// The first entry speaks at even turn indices, the second at odd ones.
    std::array<PersonaId, 2> personas;
    std::string business_context;
    std::string opening_question;
    PersonaId opening_speaker;
    int total_turns = 50;
    std::chrono::milliseconds inter_turn_delay{15000};
    /// Prior turns (besides the opening question) included in each prompt.
    int history_window = 8;
    int retry_limit = 3;
    persona::DecodingParams decoding;

    friend bool operator==(const DebateConfig&, const DebateConfig&) = default;
};

/// Throws std::invalid_argument on a broken invariant.
void check(const DebateConfig& config);

struct Turn {
    int index = 0;
    PersonaId speaker;
    std::string content;
    provider::FinishReason finish_reason = provider::FinishReason::Stop;
    Timestamp timestamp{};
    /// 0 for the seeded opening utterance, which makes no provider call.
    int attempt_count = 0;

    friend bool operator==(const Turn&, const Turn&) = default;
};

/// A command, stimulus or failure recorded in the transcript's event log.
struct LogEntry {
    std::string kind;  // start | pause | resume | inject | end | stimulus_consumed | budget_exhausted | error
    std::string text;
    int at_turn = 0;
    Timestamp timestamp{};

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct Participant {
    PersonaId id;
    std::string display_name;

    friend bool operator==(const Participant&, const Participant&) = default;
};

struct TranscriptDocument {
    std::string debate_id;
    DebateConfig config;
    std::vector<Participant> participants;
    std::string model_id;
    Timestamp started_at{};
    std::optional<Timestamp> ended_at;
    Phase phase = Phase::Created;
    std::vector<Turn> turns;
    std::vector<LogEntry> events;

    /// Display name for a persona id, falling back to the id itself.
    std::string display_name(const PersonaId& id) const;

    friend bool operator==(const TranscriptDocument&, const TranscriptDocument&) = default;
};

nlohmann::json to_json(const DebateConfig& config);
/// Reads a run configuration. Missing optional fields take their defaults;
/// missing required ones throw std::invalid_argument.
DebateConfig debate_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Turn& turn);
Turn turn_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TranscriptDocument& doc);
TranscriptDocument transcript_from_json(const nlohmann::json& j);

}  // namespace colloquy
