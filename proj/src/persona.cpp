#include "colloquy/persona.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>
#include <sstream>

#include "colloquy/structured_text.hpp"

namespace colloquy::persona {
namespace {

constexpr std::array<std::string_view, 29> kKnownNames = {
    "Adaptability to Change",
    "Argumentative Style",
    "Cautiousness in Speculative Scenarios",
    "Conventional Approach to Cost Management",
    "Dynamic Context Awareness",
    "Emphasis on Short-Term Strategies",
    "Financial Conservatism",
    "Focus on Compliance",
    "Focus on Long-Term Strategy",
    "Growth Strategies",
    "History-Based Decision Making",
    "Inclusion of Case Studies",
    "Incorporation of Informal Language",
    "Opening to Speculative Scenarios",
    "Penalty for Absence of Risks",
    "Response Length",
    "Risk Propensity",
    "Role-play Directive",
    "Role-play Driven by Innovations",
    "Sensitivity to Financial Sector Trends",
    "Sustainability Consideration",
    "Technology innovation",
    "Use of Financial Terminology",
    "Use of Proactive Language",
    "Weighting of Certain Keywords",
    "Intensive Use of Real-Time Data",
    "Logical and Reasoning",
    "Formal Language Tone",
    "Casual Language Tone",
};

std::string format_scale(double value) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

bool blank(const std::optional<std::string>& s) {
    return !s || std::all_of(s->begin(), s->end(), [](unsigned char c) { return std::isspace(c); });
}

void check_range(std::string_view field, double value, double lo, double hi) {
    if (!(value >= lo && value <= hi)) {
        throw std::invalid_argument(std::string(field) + " = " + format_scale(value) + " outside [" +
                                    format_scale(lo) + ", " + format_scale(hi) + "]");
    }
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw std::runtime_error(std::string("field '") + key + "' must be text");
    return it->get<std::string>();
}

}  // namespace

void check(const DecodingParams& p) {
    check_range("temperature", p.temperature, 0.0, 2.0);
    check_range("top_p", p.top_p, 0.0, 2.0);
    check_range("presence_penalty", p.presence_penalty, 0.0, 2.0);
    check_range("frequency_penalty", p.frequency_penalty, 0.0, 2.0);
    if (p.max_tokens < 1 || p.max_tokens > 4096) {
        throw std::invalid_argument("max_tokens = " + std::to_string(p.max_tokens) + " outside [1, 4096]");
    }
    if (p.model_id.empty()) throw std::invalid_argument("model_id is empty");
}

DecodingParams decoding_from_json(const nlohmann::json& j) {
    DecodingParams p;
    p.temperature = j.value("temperature", p.temperature);
    p.top_p = j.value("top_p", p.top_p);
    p.presence_penalty = j.value("presence_penalty", p.presence_penalty);
    p.frequency_penalty = j.value("frequency_penalty", p.frequency_penalty);
    p.max_tokens = j.value("max_tokens", p.max_tokens);
    p.model_id = j.value("model_id", p.model_id);
    check(p);
    return p;
}

nlohmann::json to_json(const DecodingParams& p) {
    return {{"temperature", p.temperature},           {"top_p", p.top_p},
            {"presence_penalty", p.presence_penalty}, {"frequency_penalty", p.frequency_penalty},
            {"max_tokens", p.max_tokens},             {"model_id", p.model_id}};
}

RawPersona raw_persona_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("persona document must be a mapping");
    RawPersona raw;
    raw.id = opt_string(j, "id");
    raw.display_name = opt_string(j, "display_name");
    raw.role_title = opt_string(j, "role_title");
    raw.narrative = opt_string(j, "narrative");

    auto params = j.find("parameters");
    if (params == j.end() || params->is_null()) return raw;
    if (!params->is_array()) throw std::runtime_error("'parameters' must be a list");
    for (const auto& entry : *params) {
        nlohmann::json name;
        nlohmann::json value;
        if (entry.is_array() && entry.size() == 2) {
            name = entry[0];
            value = entry[1];
        } else if (entry.is_object()) {
            name = entry.value("name", nlohmann::json{});
            value = entry.value("value", nlohmann::json{});
        }
        if (!name.is_string() || !value.is_number()) {
            throw std::runtime_error("parameter entries need a text name and a numeric value: " + entry.dump());
        }
        raw.parameters.emplace_back(name.get<std::string>(), value.get<double>());
    }
    return raw;
}

RawPersona raw_persona_from_yaml(std::string_view text) {
    return raw_persona_from_json(parse_structured_text(text));
}

RawPersona read_persona_file(const std::string& path) {
    return raw_persona_from_json(read_structured_file(path));
}

nlohmann::json to_json(const PersonaSpec& persona) {
    auto params = nlohmann::json::array();
    for (const auto& [name, value] : persona.parameters) {
        params.push_back({{"name", name}, {"value", value}});
    }
    return {{"id", persona.id.value},
            {"display_name", persona.display_name},
            {"role_title", persona.role_title},
            {"narrative", persona.narrative},
            {"parameters", std::move(params)}};
}

std::span<const std::string_view> known_parameter_names() {
    return kKnownNames;
}

PersonaSpec validate_persona(const RawPersona& sheet, ValidationMode mode) {
    using Kind = ValidationError::Kind;
    auto require = [](const std::optional<std::string>& field, const char* name) {
        if (blank(field)) {
            throw ValidationError(Kind::MissingField, name, std::string("missing field '") + name + "'");
        }
        return *field;
    };

    PersonaSpec spec;
    spec.id.value = require(sheet.id, "id");
    spec.display_name = require(sheet.display_name, "display_name");
    spec.role_title = require(sheet.role_title, "role_title");
    spec.narrative = sheet.narrative.value_or("");

    for (const auto& [name, value] : sheet.parameters) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw ValidationError(Kind::OutOfRange, name,
                                  "parameter '" + name + "' = " + format_scale(value) + " outside [0, 1]");
        }
        if (spec.parameters.contains(name)) {
            throw ValidationError(Kind::DuplicateParameter, name, "parameter '" + name + "' appears twice");
        }
        bool known = std::find(kKnownNames.begin(), kKnownNames.end(), name) != kKnownNames.end();
        if (!known) {
            if (mode == ValidationMode::Strict) {
                throw ValidationError(Kind::UnknownParameter, name, "unknown parameter '" + name + "'");
            }
            spec.warnings.push_back("unknown parameter '" + name + "' kept");
        }
        spec.parameters.emplace(name, value);
    }
    return spec;
}

Band band_for(double value) noexcept {
    if (value <= 0.0) return Band::Omit;
    if (value < 0.34) return Band::Downplay;
    if (value < 0.67) return Band::Moderate;
    if (value < 1.0) return Band::Strong;
    return Band::Defining;
}

std::string_view band_label(Band band) noexcept {
    switch (band) {
        case Band::Omit: return "omit";
        case Band::Downplay: return "downplay";
        case Band::Moderate: return "moderately apply";
        case Band::Strong: return "strongly emphasize";
        case Band::Defining: return "treat as a defining trait";
    }
    return "omit";
}

std::optional<std::string> directive_line(std::string_view name, double value) {
    std::string_view instruction;
    switch (band_for(value)) {
        case Band::Omit: return std::nullopt;
        case Band::Downplay: instruction = "downplay this; let it surface only rarely."; break;
        case Band::Moderate: instruction = "moderately apply this where it fits the discussion."; break;
        case Band::Strong: instruction = "strongly emphasize this throughout the conversation."; break;
        case Band::Defining:
            instruction = "treat as a defining trait; strongly emphasize it in every reply.";
            break;
    }
    std::string line = "- ";
    line += name;
    line += " [";
    line += format_scale(value);
    line += "]: ";
    line += instruction;
    return line;
}

CompiledPrompt compile_system_prompt(const PersonaSpec& persona, const BusinessContext& context) {
    bool empty = std::all_of(context.text.begin(), context.text.end(),
                             [](unsigned char c) { return std::isspace(c); });
    if (empty) throw EmptyContext();

    CompiledPrompt out;
    std::ostringstream s;
    s << "You are " << persona.display_name << ", " << persona.role_title << ".\n";
    if (!persona.narrative.empty()) s << "\n" << persona.narrative << "\n";
    s << "\nBusiness context:\n" << context.text << "\n";
    s << "\nBehavioral directives (scale 0 to 1):\n";
    // std::map iterates in lexicographic name order.
    for (const auto& [name, value] : persona.parameters) {
        if (auto line = directive_line(name, value)) {
            s << *line << "\n";
            ++out.directive_count;
        }
    }
    s << "\nRole-play instruction: stay in character; respond as " << persona.display_name << ".\n";
    out.system_text = s.str();
    return out;
}

DecodingParams decoding_params_for(const DecodingParams& globals, const PersonaSpec&) {
    return globals;
}

}  // namespace colloquy::persona
