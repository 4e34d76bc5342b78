#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace colloquy {

/// Opaque persona identifier ("anne", "john", ...).
struct PersonaId {
    std::string value;

    friend auto operator<=>(const PersonaId&, const PersonaId&) = default;
};

}  // namespace colloquy

namespace colloquy::persona {

/// Sampling controls sent with every completion request. Both debate
/// participants always share one instance.
struct DecodingParams {
    double temperature = 0.8;
    double top_p = 0.8;
    double presence_penalty = 0.8;
    double frequency_penalty = 0.8;
    int max_tokens = 100;
    std::string model_id = "gpt-3.5-turbo";

    friend bool operator==(const DecodingParams&, const DecodingParams&) = default;
};

/// Throws std::invalid_argument naming the first field outside its range.
void check(const DecodingParams& params);

DecodingParams decoding_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DecodingParams& params);

struct PersonaSpec {
    PersonaId id;
    std::string display_name;
    std::string role_title;
    std::string narrative;
    /// Scale values in [0, 1], keyed (and therefore iterated) by name.
    std::map<std::string, double> parameters;
    /// Unknown parameter names kept in lenient mode.
    std::vector<std::string> warnings;

    friend bool operator==(const PersonaSpec&, const PersonaSpec&) = default;
};

/// A persona document as read from disk, before any checking. Parameters
/// keep their file order so duplicates can be reported.
struct RawPersona {
    std::optional<std::string> id;
    std::optional<std::string> display_name;
    std::optional<std::string> role_title;
    std::optional<std::string> narrative;
    std::vector<std::pair<std::string, double>> parameters;
};

RawPersona raw_persona_from_json(const nlohmann::json& j);
RawPersona raw_persona_from_yaml(std::string_view text);
RawPersona read_persona_file(const std::string& path);
nlohmann::json to_json(const PersonaSpec& persona);

enum class ValidationMode { Strict, Lenient };

class ValidationError : public std::runtime_error {
public:
    enum class Kind { OutOfRange, DuplicateParameter, MissingField, UnknownParameter };

    ValidationError(Kind kind, std::string subject, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind), subject_(std::move(subject)) {}

    Kind kind() const noexcept { return kind_; }
    /// Offending parameter or field name.
    const std::string& subject() const noexcept { return subject_; }

private:
    Kind kind_;
    std::string subject_;
};

/// The 29 named behavioral scales of the reference persona sheets.
std::span<const std::string_view> known_parameter_names();

PersonaSpec validate_persona(const RawPersona& sheet, ValidationMode mode = ValidationMode::Strict);

// -- prompt compilation ------------------------------------------------------

/// Scenario text bound into every compiled system prompt.
struct BusinessContext {
    std::string text;
};

enum class Band { Omit, Downplay, Moderate, Strong, Defining };

/// Maps a scale value onto a directive strength:
///   0.0 -> Omit, (0, 0.34) -> Downplay, [0.34, 0.67) -> Moderate,
///   [0.67, 1.0) -> Strong, 1.0 -> Defining.
Band band_for(double value) noexcept;
std::string_view band_label(Band band) noexcept;

/// Revision of the banding table above; part of the compiled prompt identity.
inline constexpr int kBandingTableVersion = 1;

struct CompiledPrompt {
    std::string system_text;
    std::size_t directive_count = 0;

    friend bool operator==(const CompiledPrompt&, const CompiledPrompt&) = default;
};

class EmptyContext : public std::invalid_argument {
public:
    EmptyContext() : std::invalid_argument("business context is empty") {}
};

/// One directive line, exactly as it appears in the compiled prompt, or
/// nullopt for omitted scales.
std::optional<std::string> directive_line(std::string_view name, double value);

CompiledPrompt compile_system_prompt(const PersonaSpec& persona, const BusinessContext& context);

/// Persona scales never modulate decoding; this is the identity on `globals`.
DecodingParams decoding_params_for(const DecodingParams& globals, const PersonaSpec& persona);

}  // namespace colloquy::persona
