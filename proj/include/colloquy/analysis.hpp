#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "colloquy/transcript.hpp"

namespace colloquy::analysis {

/// A word with its byte span in the original text. `text` is ASCII
/// lower-cased.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Word characters are ASCII letters, digits and any non-ASCII byte. A '-'
/// or '\'' between two word characters joins them ("real-time", "don't");
/// everything else separates tokens.
std::vector<Token> tokenize(std::string_view text);

std::map<std::string, int> token_frequency(std::string_view text);

struct KeywordSet {
    PersonaId persona;
    /// Lower-case, de-duplicated, in first-seen order.
    std::vector<std::string> phrases;
};

/// Normalizes phrases; throws std::invalid_argument when none remain.
KeywordSet make_keyword_set(PersonaId persona, const std::vector<std::string>& phrases);

/// Accepts {"<persona id>": ["phrase", ...], ...} or
/// {"keywords": [{"persona": id, "phrases": [...]}, ...]}.
std::vector<KeywordSet> keyword_sets_from_json(const nlohmann::json& j);
std::vector<KeywordSet> read_keywords_file(const std::string& path);

/// Non-overlapping whole-token occurrences of `phrase` in `tokens`.
int count_phrase(const std::vector<Token>& tokens, std::string_view phrase);

class UnknownPersonaInKeywordSet : public std::invalid_argument {
public:
    explicit UnknownPersonaInKeywordSet(const PersonaId& id)
        : std::invalid_argument("keyword set names persona '" + id.value + "' which is not in the transcript") {}
};

class EmptyTranscript : public std::invalid_argument {
public:
    EmptyTranscript() : std::invalid_argument("transcript has no turns") {}
};

struct TurnHits {
    int turn_index = 0;
    std::map<std::string, int> counts;

    friend bool operator==(const TurnHits&, const TurnHits&) = default;
};

struct PersonaFrequency {
    PersonaId persona;
    std::string display_name;
    int turn_count = 0;
    /// Every phrase of the persona's keyword set, including zero counts.
    std::map<std::string, int> phrase_counts;
    int total_hits = 0;
    /// Fraction of all turns; absent for an empty transcript.
    std::optional<double> balance;
    /// Turns with at least one hit.
    std::vector<TurnHits> per_turn;

    friend bool operator==(const PersonaFrequency&, const PersonaFrequency&) = default;
};

struct FrequencyReport {
    std::string debate_id;
    int total_turns = 0;
    int total_hits = 0;
    std::vector<PersonaFrequency> personas;

    const PersonaFrequency* find(const PersonaId& id) const;

    friend bool operator==(const FrequencyReport&, const FrequencyReport&) = default;
};

/// Counts each persona's phrases within that persona's own turns only.
FrequencyReport frequency_analysis(const TranscriptDocument& doc, const std::vector<KeywordSet>& keyword_sets);

/// Fraction of turns per participant. Throws EmptyTranscript.
std::map<PersonaId, double> turn_balance(const TranscriptDocument& doc);

struct Excerpt {
    PersonaId persona;
    int turn_index = 0;
    /// Turn text with every matched phrase wrapped in "**".
    std::string excerpt;
    std::vector<std::string> matched_phrases;

    friend bool operator==(const Excerpt&, const Excerpt&) = default;
};

/// Up to `limit` matching turns per persona, in turn order. Throws
/// std::invalid_argument when limit < 1.
std::vector<Excerpt> extract_excerpts(const TranscriptDocument& doc, const std::vector<KeywordSet>& keyword_sets,
                                      int limit);

nlohmann::json to_json(const FrequencyReport& report);
FrequencyReport frequency_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Excerpt& excerpt);

/// Plain-text table for terminals.
std::string render_table(const FrequencyReport& report);

}  // namespace colloquy::analysis
