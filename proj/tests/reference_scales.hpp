#pragma once

// Reference persona scales, typed in from the published parameter table
// (classic CFO = John, bold CFO = Anne). Kept apart from data/ so the shipped
// sheets can be checked against it.

#include <array>
#include <string_view>

namespace colloquy::testing {

struct ScaleRow {
    std::string_view name;
    double john;
    double anne;
};

inline constexpr std::array<ScaleRow, 29> kReferenceScales{{
    {"Adaptability to Change", 0.5, 1.0},
    {"Argumentative Style", 0.8, 0.8},
    {"Cautiousness in Speculative Scenarios", 1.0, 0.7},
    {"Conventional Approach to Cost Management", 1.0, 0.5},
    {"Dynamic Context Awareness", 0.8, 0.8},
    {"Emphasis on Short-Term Strategies", 0.5, 0.9},
    {"Financial Conservatism", 1.0, 0.5},
    {"Focus on Compliance", 0.9, 0.5},
    {"Focus on Long-Term Strategy", 0.8, 0.5},
    {"Growth Strategies", 0.5, 0.9},
    {"History-Based Decision Making", 1.0, 0.5},
    {"Inclusion of Case Studies", 1.0, 0.7},
    {"Incorporation of Informal Language", 0.0, 0.8},
    {"Opening to Speculative Scenarios", 0.8, 1.0},
    {"Penalty for Absence of Risks", 0.3, 0.3},
    {"Response Length", 0.5, 0.5},
    {"Risk Propensity", 0.5, 0.9},
    {"Role-play Directive", 0.8, 0.8},
    {"Role-play Driven by Innovations", 0.8, 1.0},
    {"Sensitivity to Financial Sector Trends", 0.8, 0.7},
    {"Sustainability Consideration", 0.7, 0.7},
    {"Technology innovation", 0.7, 1.0},
    {"Use of Financial Terminology", 1.0, 1.0},
    {"Use of Proactive Language", 0.8, 0.8},
    {"Weighting of Certain Keywords", 0.6, 0.6},
    {"Intensive Use of Real-Time Data", 0.6, 1.0},
    {"Logical and Reasoning", 0.9, 0.6},
    {"Formal Language Tone", 1.0, 0.7},
    {"Casual Language Tone", 0.0, 0.0},
}};

/// Band wording expected for each value that occurs in the table, worked
/// out by hand from the banding thresholds.
inline std::string_view expected_band_phrase(double v) {
    if (v == 0.0) return "";
    if (v == 0.3) return "downplay";
    if (v == 0.5 || v == 0.6) return "moderately apply";
    if (v == 0.7 || v == 0.8 || v == 0.9) return "strongly emphasize";
    if (v == 1.0) return "treat as a defining trait";
    return "?";
}

}  // namespace colloquy::testing
