#include "colloquy/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "colloquy/structured_text.hpp"

namespace colloquy::analysis {
namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_joiner(unsigned char c) {
    return c == '-' || c == '\'';
}

char lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

std::vector<std::string> phrase_tokens(std::string_view phrase) {
    std::vector<std::string> out;
    for (auto& t : tokenize(phrase)) out.push_back(std::move(t.text));
    return out;
}

bool matches_at(const std::vector<Token>& tokens, std::size_t at, const std::vector<std::string>& phrase) {
    if (phrase.empty() || at + phrase.size() > tokens.size()) return false;
    for (std::size_t k = 0; k < phrase.size(); ++k) {
        if (tokens[at + k].text != phrase[k]) return false;
    }
    return true;
}

struct Span {
    std::size_t begin;
    std::size_t end;
};

std::vector<Span> phrase_spans(const std::vector<Token>& tokens, const std::vector<std::string>& phrase) {
    std::vector<Span> spans;
    for (std::size_t i = 0; i < tokens.size();) {
        if (matches_at(tokens, i, phrase)) {
            spans.push_back({tokens[i].begin, tokens[i + phrase.size() - 1].end});
            i += phrase.size();
        } else {
            ++i;
        }
    }
    return spans;
}

const KeywordSet* set_for(const std::vector<KeywordSet>& sets, const PersonaId& id) {
    for (const auto& s : sets) {
        if (s.persona == id) return &s;
    }
    return nullptr;
}

void check_personas(const TranscriptDocument& doc, const std::vector<KeywordSet>& sets) {
    for (const auto& s : sets) {
        if (s.persona != doc.config.personas[0] && s.persona != doc.config.personas[1]) {
            throw UnknownPersonaInKeywordSet(s.persona);
        }
    }
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        Token t;
        t.begin = i;
        while (i < n) {
            auto c = static_cast<unsigned char>(text[i]);
            if (is_word_byte(c)) {
                t.text.push_back(lower(c));
                ++i;
            } else if (is_joiner(c) && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
                t.text.push_back(static_cast<char>(c));
                ++i;
            } else {
                break;
            }
        }
        t.end = i;
        tokens.push_back(std::move(t));
    }
    return tokens;
}

std::map<std::string, int> token_frequency(std::string_view text) {
    std::map<std::string, int> counts;
    for (auto& t : tokenize(text)) ++counts[std::move(t.text)];
    return counts;
}

KeywordSet make_keyword_set(PersonaId persona, const std::vector<std::string>& phrases) {
    KeywordSet set{std::move(persona), {}};
    for (const auto& raw : phrases) {
        auto tokens = phrase_tokens(raw);
        if (tokens.empty()) continue;
        std::string normalized;
        for (const auto& t : tokens) {
            if (!normalized.empty()) normalized.push_back(' ');
            normalized += t;
        }
        if (std::find(set.phrases.begin(), set.phrases.end(), normalized) == set.phrases.end()) {
            set.phrases.push_back(std::move(normalized));
        }
    }
    if (set.phrases.empty()) throw std::invalid_argument("keyword set for '" + set.persona.value + "' is empty");
    return set;
}

std::vector<KeywordSet> keyword_sets_from_json(const nlohmann::json& j) {
    std::vector<KeywordSet> sets;
    auto phrases_of = [](const nlohmann::json& arr) {
        if (!arr.is_array()) throw std::invalid_argument("keyword phrases must be a list");
        std::vector<std::string> out;
        for (const auto& p : arr) {
            if (!p.is_string()) throw std::invalid_argument("keyword phrases must be text");
            out.push_back(p.get<std::string>());
        }
        return out;
    };
    if (!j.is_object()) throw std::invalid_argument("keywords document must be a mapping");
    if (auto list = j.find("keywords"); list != j.end()) {
        for (const auto& entry : *list) {
            sets.push_back(make_keyword_set(PersonaId{entry.at("persona").get<std::string>()},
                                            phrases_of(entry.at("phrases"))));
        }
    } else {
        for (const auto& [persona, arr] : j.items()) {
            sets.push_back(make_keyword_set(PersonaId{persona}, phrases_of(arr)));
        }
    }
    return sets;
}

std::vector<KeywordSet> read_keywords_file(const std::string& path) {
    return keyword_sets_from_json(read_structured_file(path));
}

int count_phrase(const std::vector<Token>& tokens, std::string_view phrase) {
    return static_cast<int>(phrase_spans(tokens, phrase_tokens(phrase)).size());
}

const PersonaFrequency* FrequencyReport::find(const PersonaId& id) const {
    for (const auto& p : personas) {
        if (p.persona == id) return &p;
    }
    return nullptr;
}

FrequencyReport frequency_analysis(const TranscriptDocument& doc, const std::vector<KeywordSet>& keyword_sets) {
    check_personas(doc, keyword_sets);

    FrequencyReport report;
    report.debate_id = doc.debate_id;
    report.total_turns = static_cast<int>(doc.turns.size());
    for (const auto& id : doc.config.personas) {
        PersonaFrequency pf;
        pf.persona = id;
        pf.display_name = doc.display_name(id);
        const KeywordSet* set = set_for(keyword_sets, id);
        std::vector<std::vector<std::string>> compiled;
        if (set) {
            for (const auto& phrase : set->phrases) {
                pf.phrase_counts[phrase] = 0;
                compiled.push_back(phrase_tokens(phrase));
            }
        }
        for (const auto& turn : doc.turns) {
            if (turn.speaker != id) continue;
            ++pf.turn_count;
            if (!set) continue;
            auto tokens = tokenize(turn.content);
            TurnHits hits{turn.index, {}};
            for (std::size_t k = 0; k < compiled.size(); ++k) {
                int n = static_cast<int>(phrase_spans(tokens, compiled[k]).size());
                if (n == 0) continue;
                pf.phrase_counts[set->phrases[k]] += n;
                hits.counts[set->phrases[k]] = n;
                pf.total_hits += n;
            }
            if (!hits.counts.empty()) pf.per_turn.push_back(std::move(hits));
        }
        if (report.total_turns > 0) pf.balance = double(pf.turn_count) / double(report.total_turns);
        report.total_hits += pf.total_hits;
        report.personas.push_back(std::move(pf));
    }
    return report;
}

std::map<PersonaId, double> turn_balance(const TranscriptDocument& doc) {
    if (doc.turns.empty()) throw EmptyTranscript();
    std::map<PersonaId, double> counts;
    for (const auto& id : doc.config.personas) counts[id] = 0.0;
    for (const auto& t : doc.turns) counts[t.speaker] += 1.0;
    for (auto& [_, c] : counts) c /= double(doc.turns.size());
    return counts;
}

std::vector<Excerpt> extract_excerpts(const TranscriptDocument& doc, const std::vector<KeywordSet>& keyword_sets,
                                      int limit) {
    if (limit < 1) throw std::invalid_argument("excerpt limit must be at least 1");
    check_personas(doc, keyword_sets);

    std::vector<Excerpt> out;
    for (const auto& id : doc.config.personas) {
        const KeywordSet* set = set_for(keyword_sets, id);
        if (!set) continue;
        int taken = 0;
        for (const auto& turn : doc.turns) {
            if (taken >= limit) break;
            if (turn.speaker != id) continue;
            auto tokens = tokenize(turn.content);
            std::vector<Span> spans;
            Excerpt ex{id, turn.index, {}, {}};
            for (const auto& phrase : set->phrases) {
                auto found = phrase_spans(tokens, phrase_tokens(phrase));
                if (found.empty()) continue;
                ex.matched_phrases.push_back(phrase);
                spans.insert(spans.end(), found.begin(), found.end());
            }
            if (spans.empty()) continue;

            // Longest span first among equal starts; drop spans overlapping a kept one.
            std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
                return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
            });
            std::size_t cursor = 0;
            for (const auto& span : spans) {
                if (span.begin < cursor) continue;
                ex.excerpt.append(turn.content, cursor, span.begin - cursor);
                ex.excerpt += "**";
                ex.excerpt.append(turn.content, span.begin, span.end - span.begin);
                ex.excerpt += "**";
                cursor = span.end;
            }
            ex.excerpt.append(turn.content, cursor, std::string::npos);
            out.push_back(std::move(ex));
            ++taken;
        }
    }
    return out;
}

nlohmann::json to_json(const FrequencyReport& report) {
    auto personas = nlohmann::json::array();
    for (const auto& p : report.personas) {
        auto per_turn = nlohmann::json::array();
        for (const auto& h : p.per_turn) per_turn.push_back({{"turn_index", h.turn_index}, {"counts", h.counts}});
        personas.push_back({{"persona", p.persona.value},
                            {"display_name", p.display_name},
                            {"turn_count", p.turn_count},
                            {"phrase_counts", p.phrase_counts},
                            {"total_hits", p.total_hits},
                            {"balance", p.balance ? nlohmann::json(*p.balance) : nlohmann::json("undefined")},
                            {"per_turn", std::move(per_turn)}});
    }
    return {{"debate_id", report.debate_id},
            {"total_turns", report.total_turns},
            {"total_hits", report.total_hits},
            {"personas", std::move(personas)}};
}

FrequencyReport frequency_report_from_json(const nlohmann::json& j) {
    FrequencyReport r;
    r.debate_id = j.at("debate_id").get<std::string>();
    r.total_turns = j.at("total_turns").get<int>();
    r.total_hits = j.at("total_hits").get<int>();
    for (const auto& p : j.at("personas")) {
        PersonaFrequency pf;
        pf.persona.value = p.at("persona").get<std::string>();
        pf.display_name = p.at("display_name").get<std::string>();
        pf.turn_count = p.at("turn_count").get<int>();
        pf.phrase_counts = p.at("phrase_counts").get<std::map<std::string, int>>();
        pf.total_hits = p.at("total_hits").get<int>();
        if (p.at("balance").is_number()) pf.balance = p.at("balance").get<double>();
        for (const auto& h : p.at("per_turn")) {
            pf.per_turn.push_back({h.at("turn_index").get<int>(), h.at("counts").get<std::map<std::string, int>>()});
        }
        r.personas.push_back(std::move(pf));
    }
    return r;
}

nlohmann::json to_json(const Excerpt& e) {
    return {{"persona", e.persona.value},
            {"turn_index", e.turn_index},
            {"excerpt", e.excerpt},
            {"matched_phrases", e.matched_phrases}};
}

std::string render_table(const FrequencyReport& report) {
    std::ostringstream s;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %6s %8s %6s\n", "Persona", "Turns", "Balance", "Hits");
    s << line;
    for (const auto& p : report.personas) {
        std::string balance = "n/a";
        if (p.balance) {
            char b[32];
            std::snprintf(b, sizeof b, "%.3f", *p.balance);
            balance = b;
        }
        std::snprintf(line, sizeof line, "%-16s %6d %8s %6d\n", p.display_name.c_str(), p.turn_count,
                      balance.c_str(), p.total_hits);
        s << line;
    }
    for (const auto& p : report.personas) {
        if (p.phrase_counts.empty()) continue;
        s << "\n" << p.display_name << " keywords:\n";
        for (const auto& [phrase, count] : p.phrase_counts) {
            std::snprintf(line, sizeof line, "  %-36s %6d\n", phrase.c_str(), count);
            s << line;
        }
    }
    return s.str();
}

}  // namespace colloquy::analysis
