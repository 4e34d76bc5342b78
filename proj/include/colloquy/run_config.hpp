#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "colloquy/analysis.hpp"
#include "colloquy/persona.hpp"
#include "colloquy/transcript.hpp"

namespace colloquy {

/// Everything a headless run needs, as read from a run configuration file:
///
///     persona_files: [personas/anne.yaml, personas/john.yaml]
///     keywords_file: keywords.yaml          # optional
///     output_dir: transcripts                # optional
///     provider: { base_url: https://... }    # optional
///     debate: { personas: [anne, john], opening_question: ..., ... }
///
/// Relative paths resolve against the configuration file's directory.
struct RunConfig {
    std::vector<persona::PersonaSpec> personas;
    DebateConfig debate;
    std::vector<analysis::KeywordSet> keywords;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::string> base_url;
};

RunConfig load_run_config(const std::filesystem::path& path,
                          persona::ValidationMode mode = persona::ValidationMode::Strict);

}  // namespace colloquy
