#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "colloquy/analysis.hpp"
#include "colloquy/persistence.hpp"
#include "support.hpp"

using namespace colloquy;
using colloquy::testing::TempDir;

namespace {

struct Output {
    int status;
    std::string out;
};

Output shell(const std::string& cmd) {
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf{};
    while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    const int rc = pclose(pipe);
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, out};
}

Output run(const std::string& args) { return shell(std::string(COLLOQUY_CLI) + " " + args); }

std::filesystem::path only_file(const std::filesystem::path& dir, const std::string& ext) {
    std::filesystem::path found;
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ext) {
            found = e.path();
            ++n;
        }
    }
    REQUIRE(n == 1);
    return found;
}

}  // namespace

TEST_CASE("validate-persona") {
    auto john = run("validate-persona " + testing::data_path("personas/john.yaml"));
    CHECK(john.status == 0);
    CHECK(john.out == "john: 29 parameters, 27 directives\n");
    auto anne = run("validate-persona " + testing::data_path("personas/anne.yaml"));
    CHECK(anne.out == "anne: 29 parameters, 28 directives\n");

    TempDir dir;
    std::ofstream(dir.path() / "bad.yaml") << "id: x\ndisplay_name: X\nrole_title: R\nparameters:\n"
                                              "  - { name: \"Risk Propensity\", value: 1.5 }\n";
    CHECK(run("validate-persona " + (dir.path() / "bad.yaml").string() + " 2>/dev/null").status == 1);
}

TEST_CASE("run then analyze reproduces the in-process analysis") {
    TempDir dir;
    auto result = run("run --config " + testing::data_path("reference_config.yaml") + " --mock --turns 60 --delay-ms 0 --out " +
                      dir.path().string() + " 2>/dev/null");
    REQUIRE(result.status == 0);
    CHECK(result.out.find("[0] Anne: " + testing::kOpeningQuestion) != std::string::npos);

    auto canonical = only_file(dir.path(), ".json");
    auto html = only_file(dir.path(), ".html");
    CHECK(canonical.stem() == html.stem());
    CHECK(canonical.stem().string().rfind("GPTconversation_", 0) == 0);

    auto doc = persistence::load_canonical(canonical);
    REQUIRE(doc.turns.size() == 60);
    CHECK(doc.phase == Phase::Ended);

    auto analyzed = run("analyze " + canonical.string() + " --keywords " + testing::data_path("keywords.yaml") + " --json");
    REQUIRE(analyzed.status == 0);
    auto keywords = analysis::read_keywords_file(testing::data_path("keywords.yaml"));
    auto expected = analysis::to_json(analysis::frequency_analysis(doc, keywords));
    auto excerpts = nlohmann::json::array();
    for (const auto& e : analysis::extract_excerpts(doc, keywords, 3)) excerpts.push_back(analysis::to_json(e));
    expected["excerpts"] = excerpts;
    CHECK(nlohmann::json::parse(analyzed.out) == expected);

    auto table = run("analyze " + canonical.string() + " --keywords " + testing::data_path("keywords.yaml"));
    CHECK(table.out.find("Anne") != std::string::npos);
    CHECK(table.out.find("30") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
    TempDir dir;
    auto result = shell("env COLLOQUY_OUTPUT_DIR=" + dir.path().string() + " COLLOQUY_MOCK=1 " + std::string(COLLOQUY_CLI) +
                        " run --config " + testing::data_path("reference_config.yaml") + " --turns 4 --delay-ms 0 2>&1");
    CHECK(result.status == 0);
    CHECK(std::filesystem::exists(only_file(dir.path(), ".json")));
}

TEST_CASE("a live run without any key fails cleanly and prints no secret") {
    auto result = shell("env -u OPENAI_API_KEY -u COLLOQUY_MOCK -u COLLOQUY_VAULT_URL " + std::string(COLLOQUY_CLI) +
                      " run --config " + testing::data_path("reference_config.yaml") + " --turns 2 --delay-ms 0 2>&1");
    CHECK(result.status == 1);
    CHECK(result.out.find("OPENAI_API_KEY") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(run("2>/dev/null").status != 0);
    CHECK(run("analyze /nonexistent --keywords x 2>/dev/null").status != 0);
}
