#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "colloquy/transcript.hpp"

namespace colloquy::persistence {

inline constexpr int kSchemaVersion = 1;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaVersionMismatch : public std::runtime_error {
public:
    explicit SchemaVersionMismatch(int found)
        : std::runtime_error("unsupported schema_version " + std::to_string(found) + " (expected " +
                             std::to_string(kSchemaVersion) + ")"),
          found_(found) {}
    int found() const noexcept { return found_; }

private:
    int found_;
};

/// "GPTconversation_<YYYYMMDDTHHMMSSZ>" from the document's start time.
std::string file_stem(const TranscriptDocument& doc);

std::string escape_html(std::string_view text);

/// Renders the human-readable transcript page.
std::string render_html(const TranscriptDocument& doc);

/// Writes <directory>/GPTconversation_<stamp>.html. Throws IoError.
std::filesystem::path write_html(const TranscriptDocument& doc, const std::filesystem::path& directory);

/// The canonical record: the transcript as JSON plus "schema_version".
std::string render_canonical(const TranscriptDocument& doc);
TranscriptDocument parse_canonical(std::string_view text);

/// Writes <directory>/GPTconversation_<stamp>.json through a temporary file
/// and a rename, so readers never observe a partial file. Throws IoError.
std::filesystem::path write_canonical(const TranscriptDocument& doc, const std::filesystem::path& directory);

/// Throws IoError, ParseError or SchemaVersionMismatch.
TranscriptDocument load_canonical(const std::filesystem::path& path);

/// Writes `content` to `path` via a sibling temporary file and rename.
void write_atomically(const std::filesystem::path& path, std::string_view content);

/// Checkpoint sink for a running debate: rewrites the canonical record after
/// every turn and writes the HTML page once the debate is over.
class TranscriptRecorder {
public:
    explicit TranscriptRecorder(std::filesystem::path directory) : directory_(std::move(directory)) {}

    void operator()(const TranscriptDocument& doc);

    const std::filesystem::path& canonical_path() const noexcept { return canonical_; }
    const std::filesystem::path& html_path() const noexcept { return html_; }

private:
    std::filesystem::path directory_;
    std::filesystem::path canonical_;
    std::filesystem::path html_;
};

}  // namespace colloquy::persistence
