#include "colloquy/persistence.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "colloquy/structured_text.hpp"

namespace colloquy::persistence {

namespace fs = std::filesystem;

std::string file_stem(const TranscriptDocument& doc) {
    return "GPTconversation_" + format_compact_utc(doc.started_at);
}

std::string escape_html(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string render_html(const TranscriptDocument& doc) {
    std::ostringstream s;
    s << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>Conversation " << escape_html(doc.debate_id) << "</title>\n"
      << "<style>body{font-family:sans-serif;max-width:50em;margin:auto}"
         ".turn{margin:1em 0}.speaker{font-weight:bold}.event{color:#666;font-style:italic}</style>\n"
      << "</head>\n<body>\n<header class=\"metadata\">\n<h1>Conversation " << escape_html(doc.debate_id)
      << "</h1>\n<dl>\n";
    auto row = [&](std::string_view key, const std::string& value) {
        s << "<dt>" << key << "</dt><dd>" << escape_html(value) << "</dd>\n";
    };
    row("Debate", doc.debate_id);
    row("Model", doc.model_id);
    row("Started", format_iso8601(doc.started_at));
    row("Ended", doc.ended_at ? format_iso8601(*doc.ended_at) : std::string("-"));
    row("Phase", std::string(to_string(doc.phase)));
    std::string who;
    for (const auto& p : doc.participants) {
        if (!who.empty()) who += ", ";
        who += p.display_name + " (" + p.id.value + ")";
    }
    row("Participants", who);
    row("Turns", std::to_string(doc.turns.size()));
    s << "</dl>\n</header>\n<main>\n";

    // Human interjections are shown just before the turn that consumed them.
    std::size_t next_event = 0;
    auto flush_events = [&](int up_to_turn) {
        for (; next_event < doc.events.size() && doc.events[next_event].at_turn <= up_to_turn; ++next_event) {
            const auto& e = doc.events[next_event];
            if (e.kind != "inject") continue;
            s << "<div class=\"event\" data-kind=\"inject\" data-at-turn=\"" << e.at_turn
              << "\">Human interjection: " << escape_html(e.text) << "</div>\n";
        }
    };
    for (const auto& t : doc.turns) {
        flush_events(t.index);
        s << "<div class=\"turn\" data-index=\"" << t.index << "\" data-speaker=\"" << escape_html(t.speaker.value)
          << "\">\n<h2><span class=\"index\">#" << t.index << "</span> <span class=\"speaker\">"
          << escape_html(doc.display_name(t.speaker)) << "</span></h2>\n<p class=\"content\">"
          << escape_html(t.content) << "</p>\n</div>\n";
    }
    flush_events(std::numeric_limits<int>::max());
    s << "</main>\n</body>\n</html>\n";
    return s.str();
}

void write_atomically(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

namespace {

void ensure_directory(const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (!fs::is_directory(directory)) throw IoError("not a writable directory: " + directory.string());
}

}  // namespace

fs::path write_html(const TranscriptDocument& doc, const fs::path& directory) {
    ensure_directory(directory);
    auto path = directory / (file_stem(doc) + ".html");
    write_atomically(path, render_html(doc));
    return path;
}

std::string render_canonical(const TranscriptDocument& doc) {
    auto j = to_json(doc);
    j["schema_version"] = kSchemaVersion;
    return j.dump(2) + "\n";
}

TranscriptDocument parse_canonical(std::string_view text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("canonical transcript is not a JSON object");
    auto version = j.find("schema_version");
    if (version == j.end() || !version->is_number_integer()) throw ParseError("missing schema_version");
    if (version->get<int>() != kSchemaVersion) throw SchemaVersionMismatch(version->get<int>());
    try {
        return transcript_from_json(j);
    } catch (const std::exception& e) {
        throw ParseError(std::string("malformed canonical transcript: ") + e.what());
    }
}

fs::path write_canonical(const TranscriptDocument& doc, const fs::path& directory) {
    ensure_directory(directory);
    auto path = directory / (file_stem(doc) + ".json");
    write_atomically(path, render_canonical(doc));
    return path;
}

TranscriptDocument load_canonical(const fs::path& path) {
    std::string text;
    try {
        text = read_text_file(path.string());
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    return parse_canonical(text);
}

void TranscriptRecorder::operator()(const TranscriptDocument& doc) {
    canonical_ = write_canonical(doc, directory_);
    if (doc.phase == Phase::Ended || doc.phase == Phase::Failed) html_ = write_html(doc, directory_);
}

}  // namespace colloquy::persistence
