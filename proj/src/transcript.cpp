#include "colloquy/transcript.hpp"

#include <cstdio>
#include <stdexcept>

namespace colloquy {

using nlohmann::json;

Timestamp now_ms() {
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

namespace {

struct Civil {
    int year;
    unsigned month, day, hour, minute, second, millis;
};

Civil split(Timestamp t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    auto rest = t - day_point;
    auto h = duration_cast<hours>(rest);
    rest -= h;
    auto m = duration_cast<minutes>(rest);
    rest -= m;
    auto s = duration_cast<seconds>(rest);
    rest -= s;
    return {int(ymd.year()),           unsigned(ymd.month()),          unsigned(ymd.day()),
            unsigned(h.count()),       unsigned(m.count()),            unsigned(s.count()),
            unsigned(rest.count())};
}

}  // namespace

std::string format_iso8601(Timestamp t) {
    auto c = split(t);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02u.%03uZ", c.year, c.month, c.day, c.hour,
                  c.minute, c.second, c.millis);
    return buf;
}

std::string format_compact_utc(Timestamp t) {
    auto c = split(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d%02u%02uT%02u%02u%02uZ", c.year, c.month, c.day, c.hour, c.minute,
                  c.second);
    return buf;
}

Timestamp parse_iso8601(std::string_view text) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    int consumed = 0;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6) {
        throw std::invalid_argument("bad timestamp '" + buf + "'");
    }
    std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest.front() == '.') {
        rest.remove_prefix(1);
        unsigned scale = 100;
        while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) {
            ms += scale * unsigned(rest.front() - '0');
            scale /= 10;
            rest.remove_prefix(1);
        }
    }
    if (rest != "Z") throw std::invalid_argument("timestamp must be UTC ('Z'): '" + buf + "'");

    using namespace std::chrono;
    year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw std::invalid_argument("bad timestamp '" + buf + "'");
    return Timestamp{sys_days{ymd}.time_since_epoch() + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms}};
}

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::Created: return "Created";
        case Phase::Running: return "Running";
        case Phase::Paused: return "Paused";
        case Phase::Ended: return "Ended";
        case Phase::Failed: return "Failed";
    }
    return "Failed";
}

Phase phase_from_string(std::string_view text) {
    for (auto p : {Phase::Created, Phase::Running, Phase::Paused, Phase::Ended, Phase::Failed}) {
        if (to_string(p) == text) return p;
    }
    throw std::invalid_argument("unknown phase '" + std::string(text) + "'");
}

void check(const DebateConfig& c) {
    if (c.personas[0].value.empty() || c.personas[1].value.empty()) {
        throw std::invalid_argument("a debate needs two persona ids");
    }
    if (c.personas[0] == c.personas[1]) throw std::invalid_argument("the two personas must differ");
    if (c.opening_speaker != c.personas[0] && c.opening_speaker != c.personas[1]) {
        throw std::invalid_argument("opening_speaker '" + c.opening_speaker.value + "' is not a participant");
    }
    if (c.total_turns < 1) throw std::invalid_argument("total_turns must be at least 1");
    if (c.inter_turn_delay.count() < 0) throw std::invalid_argument("inter_turn_delay must not be negative");
    if (c.history_window < 0) throw std::invalid_argument("history_window must not be negative");
    if (c.retry_limit < 0) throw std::invalid_argument("retry_limit must not be negative");
    if (c.opening_question.empty()) throw std::invalid_argument("opening_question is required");
    if (c.business_context.empty()) throw std::invalid_argument("business_context is required");
    persona::check(c.decoding);
}

json to_json(const DebateConfig& c) {
    return {{"personas", {c.personas[0].value, c.personas[1].value}},
            {"business_context", c.business_context},
            {"opening_question", c.opening_question},
            {"opening_speaker", c.opening_speaker.value},
            {"total_turns", c.total_turns},
            {"inter_turn_delay_ms", c.inter_turn_delay.count()},
            {"history_window", c.history_window},
            {"retry_limit", c.retry_limit},
            {"decoding", persona::to_json(c.decoding)}};
}

DebateConfig debate_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("debate config must be a mapping");
    auto text = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) throw std::invalid_argument(std::string(key) + " is required");
        if (!it->is_string()) throw std::invalid_argument(std::string(key) + " must be text");
        return it->get<std::string>();
    };
    auto integer = [&](const char* key, int fallback) -> int {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return fallback;
        if (!it->is_number_integer()) throw std::invalid_argument(std::string(key) + " must be an integer");
        return it->get<int>();
    };

    DebateConfig c;
    auto personas = j.find("personas");
    if (personas == j.end() || !personas->is_array() || personas->size() != 2 || !(*personas)[0].is_string() ||
        !(*personas)[1].is_string()) {
        throw std::invalid_argument("personas must list exactly two persona ids");
    }
    c.personas = {PersonaId{(*personas)[0].get<std::string>()}, PersonaId{(*personas)[1].get<std::string>()}};
    c.business_context = text("business_context");
    c.opening_question = text("opening_question");
    c.opening_speaker = j.contains("opening_speaker") ? PersonaId{text("opening_speaker")} : c.personas[0];
    c.total_turns = integer("total_turns", c.total_turns);
    c.inter_turn_delay = std::chrono::milliseconds(integer("inter_turn_delay_ms", int(c.inter_turn_delay.count())));
    c.history_window = integer("history_window", c.history_window);
    c.retry_limit = integer("retry_limit", c.retry_limit);
    if (auto d = j.find("decoding"); d != j.end() && !d->is_null()) {
        c.decoding = persona::decoding_from_json(*d);
    }
    check(c);
    return c;
}

json to_json(const Turn& t) {
    return {{"index", t.index},
            {"speaker", t.speaker.value},
            {"content", t.content},
            {"finish_reason", provider::to_string(t.finish_reason)},
            {"timestamp", format_iso8601(t.timestamp)},
            {"attempt_count", t.attempt_count}};
}

Turn turn_from_json(const json& j) {
    Turn t;
    t.index = j.at("index").get<int>();
    t.speaker.value = j.at("speaker").get<std::string>();
    t.content = j.at("content").get<std::string>();
    t.finish_reason = provider::finish_reason_from_string(j.at("finish_reason").get<std::string>());
    t.timestamp = parse_iso8601(j.at("timestamp").get<std::string>());
    t.attempt_count = j.at("attempt_count").get<int>();
    return t;
}

namespace {

json to_json(const LogEntry& e) {
    return {{"kind", e.kind}, {"text", e.text}, {"at_turn", e.at_turn}, {"timestamp", format_iso8601(e.timestamp)}};
}

LogEntry log_entry_from_json(const json& j) {
    return {j.at("kind").get<std::string>(), j.at("text").get<std::string>(), j.at("at_turn").get<int>(),
            parse_iso8601(j.at("timestamp").get<std::string>())};
}

}  // namespace

std::string TranscriptDocument::display_name(const PersonaId& id) const {
    for (const auto& p : participants) {
        if (p.id == id) return p.display_name;
    }
    return id.value;
}

json to_json(const TranscriptDocument& doc) {
    auto participants = json::array();
    for (const auto& p : doc.participants) {
        participants.push_back({{"id", p.id.value}, {"display_name", p.display_name}});
    }
    auto turns = json::array();
    for (const auto& t : doc.turns) turns.push_back(to_json(t));
    auto events = json::array();
    for (const auto& e : doc.events) events.push_back(to_json(e));
    return {{"debate_id", doc.debate_id},
            {"config", to_json(doc.config)},
            {"participants", std::move(participants)},
            {"model_id", doc.model_id},
            {"started_at", format_iso8601(doc.started_at)},
            {"ended_at", doc.ended_at ? json(format_iso8601(*doc.ended_at)) : json(nullptr)},
            {"phase", to_string(doc.phase)},
            {"turns", std::move(turns)},
            {"events", std::move(events)}};
}

TranscriptDocument transcript_from_json(const json& j) {
    TranscriptDocument doc;
    doc.debate_id = j.at("debate_id").get<std::string>();
    doc.config = debate_config_from_json(j.at("config"));
    for (const auto& p : j.at("participants")) {
        doc.participants.push_back({PersonaId{p.at("id").get<std::string>()}, p.at("display_name").get<std::string>()});
    }
    doc.model_id = j.at("model_id").get<std::string>();
    doc.started_at = parse_iso8601(j.at("started_at").get<std::string>());
    if (const auto& ended = j.at("ended_at"); !ended.is_null()) doc.ended_at = parse_iso8601(ended.get<std::string>());
    doc.phase = phase_from_string(j.at("phase").get<std::string>());
    for (const auto& t : j.at("turns")) doc.turns.push_back(turn_from_json(t));
    for (const auto& e : j.at("events")) doc.events.push_back(log_entry_from_json(e));
    return doc;
}

}  // namespace colloquy
