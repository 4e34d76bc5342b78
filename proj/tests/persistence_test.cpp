#include <doctest.h>

#include <fstream>
#include <regex>

#include "colloquy/persistence.hpp"
#include "generators.hpp"
#include "harness.hpp"

using namespace colloquy;
using namespace colloquy::persistence;
using colloquy::testing::TempDir;

namespace {

TranscriptDocument stamped_doc() {
    TranscriptDocument doc;
    doc.debate_id = "d-1";
    doc.config = testing::fast_config(4);
    doc.participants = {{PersonaId{"anne"}, "Anne"}, {PersonaId{"john"}, "John"}};
    doc.model_id = "gpt-3.5-turbo";
    doc.started_at = parse_iso8601("2024-03-01T12:00:00Z");
    return doc;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("timestamps") {
    auto t = parse_iso8601("2024-03-01T12:00:00.250Z");
    CHECK(format_iso8601(t) == "2024-03-01T12:00:00.250Z");
    CHECK(format_compact_utc(t) == "20240301T120000Z");
    CHECK(format_iso8601(parse_iso8601("1999-12-31T23:59:59Z")) == "1999-12-31T23:59:59.000Z");
    CHECK_THROWS(parse_iso8601("yesterday"));
    CHECK_THROWS(parse_iso8601("2024-13-01T00:00:00Z"));
}

TEST_CASE("HTML file name follows the timestamp pattern") {
    TempDir dir;
    auto path = write_html(stamped_doc(), dir.path());
    CHECK(path.filename() == "GPTconversation_20240301T120000Z.html");
    CHECK(write_canonical(stamped_doc(), dir.path()).filename() == "GPTconversation_20240301T120000Z.json");
    CHECK(std::regex_match(path.filename().string(), std::regex(R"(GPTconversation_\d{8}T\d{6}Z\.html)")));
}

TEST_CASE("empty transcript renders a header and no turn blocks") {
    auto html = render_html(stamped_doc());
    CHECK(html.find("class=\"metadata\"") != std::string::npos);
    CHECK(html.find("class=\"turn\"") == std::string::npos);
    CHECK(html.find("gpt-3.5-turbo") != std::string::npos);
}

TEST_CASE("markup in content is escaped") {
    CHECK(escape_html(R"(<b>"x" & 'y'</b>)") == "&lt;b&gt;&quot;x&quot; &amp; &#39;y&#39;&lt;/b&gt;");
    auto doc = stamped_doc();
    doc.turns.push_back({0, PersonaId{"anne"}, "<script>alert('x')</script> & more", {}, doc.started_at, 0});
    auto html = render_html(doc);
    CHECK(html.find("<script>") == std::string::npos);
    CHECK(html.find("&lt;script&gt;alert(&#39;x&#39;)&lt;/script&gt; &amp; more") != std::string::npos);
}

TEST_CASE("schema versioning and parse errors") {
    auto text = render_canonical(stamped_doc());
    auto j = nlohmann::json::parse(text);
    CHECK(j["schema_version"] == kSchemaVersion);
    j["schema_version"] = 99;
    try {
        parse_canonical(j.dump());
        FAIL("expected SchemaVersionMismatch");
    } catch (const SchemaVersionMismatch& e) {
        CHECK(e.found() == 99);
    }
    j.erase("schema_version");
    CHECK_THROWS_AS(parse_canonical(j.dump()), ParseError);
    CHECK_THROWS_AS(parse_canonical("{not json"), ParseError);
    auto broken = nlohmann::json::parse(text);
    broken["turns"] = "nope";
    CHECK_THROWS_AS(parse_canonical(broken.dump()), ParseError);
    CHECK_THROWS_AS(load_canonical("/nonexistent/file.json"), IoError);
}

TEST_CASE("writing into a path that is a file fails with IoError") {
    TempDir dir;
    std::ofstream(dir.path() / "blocker") << "x";
    CHECK_THROWS_AS(write_canonical(stamped_doc(), dir.path() / "blocker"), IoError);
}

TEST_CASE("property: canonical round trip on randomized documents") {
    std::mt19937_64 rng(99);
    TempDir dir;
    for (int i = 0; i < 200; ++i) {
        auto doc = testing::random_document(rng);
        CHECK(parse_canonical(render_canonical(doc)) == doc);
        auto path = write_canonical(doc, dir.path());
        CHECK(load_canonical(path) == doc);
    }
}

TEST_CASE("atomic writes leave no temporary files behind") {
    TempDir dir;
    auto target = dir.path() / "x.json";
    write_atomically(target, "first");
    write_atomically(target, "second");
    CHECK(slurp(target) == "second");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
    CHECK(entries == 1);
}

TEST_CASE("a 60-turn mock debate persists, reloads and agrees across formats") {
    TempDir dir;
    auto recorder = std::make_shared<TranscriptRecorder>(dir.path());
    orchestrator::DebateHooks hooks;
    hooks.on_checkpoint = [recorder](const TranscriptDocument& doc) { (*recorder)(doc); };
    testing::Harness full(testing::fast_config(60), hooks);
    full.debate->apply_command(orchestrator::Command::start());
    full.debate->apply_command(orchestrator::Command::inject("Consider <a> & \"b\""));
    full.debate->run();

    auto loaded = load_canonical(recorder->canonical_path());
    REQUIRE(loaded.turns.size() == 60);
    for (std::size_t i = 0; i < loaded.turns.size(); ++i) {
        CHECK(loaded.turns[i].speaker.value == (i % 2 == 0 ? "anne" : "john"));
    }
    CHECK(loaded == full.debate->document());

    // Cross-format scan: every HTML turn block matches the canonical record.
    const auto html = slurp(recorder->html_path());
    std::regex block(R"re(<div class="turn" data-index="(\d+)" data-speaker="([^"]*)">\n<h2><span class="index">#\d+</span> <span class="speaker">([^<]*)</span></h2>\n<p class="content">([^<]*)</p>)re");
    std::size_t n = 0;
    for (auto it = std::sregex_iterator(html.begin(), html.end(), block); it != std::sregex_iterator(); ++it, ++n) {
        REQUIRE(n < loaded.turns.size());
        const auto& t = loaded.turns[n];
        CHECK(std::stoi((*it)[1]) == t.index);
        CHECK((*it)[2] == t.speaker.value);
        CHECK((*it)[3] == loaded.display_name(t.speaker));
        CHECK((*it)[4] == escape_html(t.content));
    }
    CHECK(n == loaded.turns.size());
    CHECK(html.find("Human interjection: Consider &lt;a&gt; &amp; &quot;b&quot;") != std::string::npos);
}
