#include <doctest.h>

#include <thread>

#include "colloquy/analysis.hpp"
#include "colloquy/openai_backend.hpp"
#include "colloquy/persistence.hpp"
#include "colloquy/service.hpp"
#include "colloquy/structured_text.hpp"
#include "fake_server.hpp"
#include "support.hpp"

using namespace colloquy;
using namespace colloquy::service;
using colloquy::testing::TempDir;

namespace {

nlohmann::json reference_debate(int turns) {
    auto doc = read_structured_file(testing::data_path("reference_config.yaml"));
    auto debate = doc.at("debate");
    debate["total_turns"] = turns;
    return debate;
}

struct Fixture {
    TempDir out;
    std::unique_ptr<DebateService> service;
    testing::LocalServer http;
    std::unique_ptr<httplib::Client> client;

    explicit Fixture(std::chrono::milliseconds delay = std::chrono::milliseconds(0)) {
        ServiceOptions options;
        options.completer_factory = [](const DebateConfig& config) {
            return orchestrator::make_completer(config, std::make_shared<provider::MockBackend>(),
                                                testing::no_sleep_options());
        };
        options.keywords = analysis::read_keywords_file(testing::data_path("keywords.yaml"));
        options.output_dir = out.path();
        options.delay_override = delay;
        service = std::make_unique<DebateService>(std::move(options));
        service->personas().add(testing::load_persona("anne"));
        service->personas().add(testing::load_persona("john"));
        install_routes(http.server(), *service);
        http.start();
        client = std::make_unique<httplib::Client>("127.0.0.1", http.port());
        client->set_read_timeout(std::chrono::seconds(10));
    }

    ~Fixture() {
        service->shutdown();
        http.stop();
    }

    httplib::Result post(const std::string& path, const nlohmann::json& body, httplib::Headers headers = {}) {
        return client->Post(path, headers, body.dump(), "application/json");
    }

    std::string create(int turns) {
        auto res = post("/debates", reference_debate(turns));
        REQUIRE(res);
        REQUIRE(res->status == 201);
        return nlohmann::json::parse(res->body).at("id").get<std::string>();
    }

    int command(const std::string& id, const nlohmann::json& body) {
        auto res = post("/debates/" + id + "/commands", body);
        REQUIRE(res);
        return res->status;
    }

    nlohmann::json get_json(const std::string& path) {
        auto res = client->Get(path);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        return nlohmann::json::parse(res->body);
    }
};

struct SseFrame {
    std::uint64_t id;
    std::string event;
    nlohmann::json data;
};

std::vector<SseFrame> parse_frames(const std::string& stream) {
    std::vector<SseFrame> frames;
    std::size_t pos = 0;
    while (true) {
        auto end = stream.find("\n\n", pos);
        if (end == std::string::npos) break;
        std::string block = stream.substr(pos, end - pos);
        pos = end + 2;
        if (block.rfind(":", 0) == 0) continue;  // comment / keep-alive
        SseFrame f{};
        std::istringstream in(block);
        for (std::string line; std::getline(in, line);) {
            if (line.rfind("id: ", 0) == 0) f.id = std::stoull(line.substr(4));
            if (line.rfind("event: ", 0) == 0) f.event = line.substr(7);
            if (line.rfind("data: ", 0) == 0) f.data = nlohmann::json::parse(line.substr(6));
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

/// Reads the event stream until the server closes it.
std::vector<SseFrame> read_stream(int port, const std::string& path, int* status = nullptr) {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(std::chrono::seconds(20));
    std::string body;
    auto res = c.Get(path, [&](const char* data, size_t n) {
        body.append(data, n);
        return true;
    });
    REQUIRE(res);
    if (status) *status = res->status;
    return parse_frames(body);
}

}  // namespace

TEST_CASE("persona routes") {
    Fixture f;
    auto list = f.get_json("/personas");
    CHECK(list.size() == 2);

    nlohmann::json sheet = {{"id", "zoe"},
                            {"display_name", "Zoe"},
                            {"role_title", "Treasurer"},
                            {"narrative", "Careful."},
                            {"parameters", {{{"name", "Risk Propensity"}, {"value", 0.2}}}}};
    auto ok = f.post("/personas", sheet);
    REQUIRE(ok);
    CHECK(ok->status == 201);
    CHECK(f.get_json("/personas").size() == 3);

    sheet["parameters"] = {{{"name", "Risk Propensity"}, {"value", 1.2}}};
    auto bad = f.post("/personas", sheet);
    CHECK(bad->status == 400);
    CHECK(nlohmann::json::parse(bad->body)["error"] == "OutOfRange");

    sheet["parameters"] = {{{"name", "Mind Reading"}, {"value", 0.2}}};
    CHECK(f.post("/personas", sheet)->status == 400);
    auto lenient = f.post("/personas?lenient=1", sheet);
    CHECK(lenient->status == 201);
    CHECK(nlohmann::json::parse(lenient->body)["warnings"].size() == 1);

    CHECK(f.client->Post("/personas", "{", "application/json")->status == 400);
}

TEST_CASE("creating debates") {
    Fixture f;
    auto id = f.create(50);
    auto summary = f.get_json("/debates/" + id);
    CHECK(summary["phase"] == "Created");
    CHECK(summary["total_turns"] == 50);
    CHECK(summary["personas"] == nlohmann::json::array({"anne", "john"}));

    auto missing = reference_debate(5);
    missing.erase("opening_question");
    CHECK(f.post("/debates", missing)->status == 400);

    auto stranger = reference_debate(5);
    stranger["personas"] = {"anne", "zoe"};
    auto res = f.post("/debates", stranger);
    CHECK(res->status == 404);
    CHECK(nlohmann::json::parse(res->body)["error"] == "UnknownPersona");

    auto first = f.post("/debates", reference_debate(5), {{"Idempotency-Key", "k-1"}});
    auto again = f.post("/debates", reference_debate(5), {{"Idempotency-Key", "k-1"}});
    CHECK(nlohmann::json::parse(first->body)["id"] == nlohmann::json::parse(again->body)["id"]);
    auto other = f.post("/debates", reference_debate(5), {{"Idempotency-Key", "k-2"}});
    CHECK(nlohmann::json::parse(first->body)["id"] != nlohmann::json::parse(other->body)["id"]);

    CHECK(f.get_json("/debates").size() == 3);
    CHECK(f.client->Get("/debates/d-nope")->status == 404);

    auto options = f.client->Options("/debates");
    REQUIRE(options);
    CHECK(options->get_header_value("Access-Control-Allow-Origin") == "*");
}

TEST_CASE("commands and their status codes") {
    Fixture f(std::chrono::milliseconds(20));
    auto id = f.create(200);
    CHECK(f.command(id, {{"command", "pause"}}) == 409);
    CHECK(f.command(id, {{"command", "start"}}) == 202);
    CHECK(f.command(id, {{"command", "inject"}, {"text", ""}}) == 400);
    CHECK(f.command(id, {{"command", "inject"}, {"text", "Consider a sudden rate hike"}}) == 202);
    CHECK(f.command(id, {{"command", "dance"}}) == 400);
    CHECK(f.command(id, nlohmann::json::object()) == 400);
    CHECK(f.command("d-nope", {{"command", "start"}}) == 404);
    CHECK(f.command(id, {{"command", "pause"}}) == 202);
    CHECK(f.command(id, {{"command", "resume"}}) == 202);
    CHECK(f.command(id, {{"command", "end"}}) == 202);
    f.service->debate(id)->wait_until_finished();
    CHECK(f.command(id, {{"command", "resume"}}) == 409);

    auto frames = read_stream(f.http.port(), "/debates/" + id + "/events?from=0");
    bool saw_start = false;
    bool saw_stimulus = false;
    for (const auto& fr : frames) {
        if (fr.event == "PhaseChanged" && fr.data["payload"]["to"] == "Running") saw_start = true;
        if (fr.event == "StimulusInjected" && fr.data["payload"]["text"] == "Consider a sudden rate hike") {
            saw_stimulus = true;
        }
    }
    CHECK(saw_start);
    CHECK(saw_stimulus);
}

TEST_CASE("event stream replay, resume and 404") {
    Fixture f;
    auto id = f.create(10);
    CHECK(f.command(id, {{"command", "start"}}) == 202);
    f.service->debate(id)->wait_until_finished();

    auto all = read_stream(f.http.port(), "/debates/" + id + "/events?from=0");
    REQUIRE_FALSE(all.empty());
    std::vector<int> turn_indices;
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i].id == i);
        CHECK(all[i].data["sequence"] == i);
        CHECK(all[i].data["debate_id"] == id);
        if (all[i].event == "TurnCompleted") turn_indices.push_back(all[i].data["payload"]["index"].get<int>());
    }
    CHECK(turn_indices == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(all.back().data["phase"] == "Ended");

    auto tail = read_stream(f.http.port(), "/debates/" + id + "/events?from=5");
    REQUIRE(tail.size() == all.size() - 5);
    CHECK(tail.front().id == 5);

    httplib::Client c("127.0.0.1", f.http.port());
    auto resumed = c.Get("/debates/" + id + "/events", {{"Last-Event-ID", "6"}});
    REQUIRE(resumed);
    auto frames = parse_frames(resumed->body);
    REQUIRE_FALSE(frames.empty());
    CHECK(frames.front().id == 7);

    int status = 0;
    read_stream(f.http.port(), "/debates/d-nope/events", &status);
    CHECK(status == 404);
}

TEST_CASE("property: concurrent live subscribers see dense, ordered, identical streams") {
    Fixture f(std::chrono::milliseconds(5));
    auto id = f.create(30);
    std::vector<std::vector<SseFrame>> seen(6);
    std::vector<std::thread> readers;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        readers.emplace_back([&, i] { seen[i] = read_stream(f.http.port(), "/debates/" + id + "/events?from=0"); });
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(f.command(id, {{"command", "start"}}) == 202);
    for (auto& r : readers) r.join();

    const auto total = f.service->events(id)->size();
    for (const auto& frames : seen) {
        REQUIRE(frames.size() == total);
        for (std::size_t k = 0; k < frames.size(); ++k) {
            CHECK(frames[k].id == k);
            CHECK(frames[k].data == seen[0][k].data);
        }
    }
    // API-visible phase matches the phase each event announced.
    for (const auto& fr : seen[0]) {
        if (fr.event == "PhaseChanged") CHECK(fr.data["phase"] == fr.data["payload"]["to"]);
    }
}

TEST_CASE("transcript and analysis endpoints") {
    Fixture f;
    auto fresh = f.create(60);
    auto empty = f.get_json("/debates/" + fresh + "/analysis");
    CHECK(empty["total_turns"] == 0);
    for (const auto& p : empty["personas"]) {
        CHECK(p["turn_count"] == 0);
        CHECK(p["balance"] == "undefined");
    }

    auto id = f.create(60);
    CHECK(f.command(id, {{"command", "start"}}) == 202);
    f.service->debate(id)->wait_until_finished();

    auto report = f.get_json("/debates/" + id + "/analysis");
    CHECK(report["total_turns"] == 60);
    for (const auto& p : report["personas"]) CHECK(p["turn_count"] == 30);

    auto transcript = f.client->Get("/debates/" + id + "/transcript");
    REQUIRE(transcript);
    auto doc = persistence::parse_canonical(transcript->body);
    CHECK(doc == f.service->debate(id)->document());

    // Same report as analyzing the persisted canonical file offline.
    auto path = f.service->canonical_path(id);
    REQUIRE(path.has_value());
    CHECK(path->parent_path() == f.out.path() / id);
    auto on_disk = persistence::load_canonical(*path);
    auto keywords = analysis::read_keywords_file(testing::data_path("keywords.yaml"));
    auto offline = analysis::to_json(analysis::frequency_analysis(on_disk, keywords));
    auto excerpts = nlohmann::json::array();
    for (const auto& e : analysis::extract_excerpts(on_disk, keywords, 3)) excerpts.push_back(analysis::to_json(e));
    offline["excerpts"] = excerpts;
    CHECK(report == offline);

    CHECK(f.client->Get("/debates/" + id + "/analysis?limit=0")->status == 400);
    CHECK(f.client->Get("/debates/d-nope/analysis")->status == 404);
    CHECK(f.client->Get("/debates/d-nope/transcript")->status == 404);
}

TEST_CASE("backend selection from the environment") {
    auto env = [](std::map<std::string, std::string> vars) {
        return [vars](std::string_view name) -> std::optional<std::string> {
            if (auto it = vars.find(std::string(name)); it != vars.end()) return it->second;
            return std::nullopt;
        };
    };
    auto s = settings_from_environment(env({{"COLLOQUY_MOCK", "1"}, {"COLLOQUY_BASE_URL", "http://x:1"}}));
    CHECK(s.mock);
    CHECK(s.base_url == std::optional<std::string>("http://x:1"));
    CHECK(std::dynamic_pointer_cast<provider::MockBackend>(make_backend(s, env({}))) != nullptr);

    BackendSettings live;
    CHECK_THROWS_AS(make_backend(live, env({})), provider::SecretError);
    std::vector<std::string> log;
    auto backend = make_backend(live, env({{"OPENAI_API_KEY", "sk-env-secret"}}),
                                [&](std::string_view l) { log.emplace_back(l); });
    CHECK(std::dynamic_pointer_cast<provider::OpenAIBackend>(backend) != nullptr);
    for (const auto& l : log) CHECK(l.find("sk-env-secret") == std::string::npos);
}
