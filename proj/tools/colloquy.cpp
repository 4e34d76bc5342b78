// colloquy: headless debates, transcript analysis, persona checks and the
// HTTP service.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "colloquy/analysis.hpp"
#include "colloquy/cache.hpp"
#include "colloquy/orchestrator.hpp"
#include "colloquy/persistence.hpp"
#include "colloquy/run_config.hpp"
#include "colloquy/service.hpp"

namespace fs = std::filesystem;
using namespace colloquy;

namespace {

struct ProviderFlags {
    bool mock = false;
    std::string base_url;
    bool no_cache = false;
};

void add_provider_flags(CLI::App& cmd, ProviderFlags& flags) {
    cmd.add_flag("--mock", flags.mock, "Use the deterministic mock provider (also COLLOQUY_MOCK=1)");
    cmd.add_option("--base-url", flags.base_url, "OpenAI-compatible base URL (also COLLOQUY_BASE_URL)");
    cmd.add_flag("--no-cache", flags.no_cache, "Disable the response cache");
}

std::shared_ptr<provider::Backend> backend_for(const ProviderFlags& flags, const RunConfig* rc) {
    auto env = provider::process_environment();
    auto settings = service::settings_from_environment(env);
    if (flags.mock) settings.mock = true;
    if (!flags.base_url.empty()) {
        settings.base_url = flags.base_url;
    } else if (!settings.base_url && rc && rc->base_url) {
        settings.base_url = rc->base_url;
    }
    return service::make_backend(settings, env, [](std::string_view line) { std::cerr << line << "\n"; });
}

provider::ClientOptions client_options() {
    provider::ClientOptions options;
    options.log = [](std::string_view line) { std::cerr << "provider: " << line << "\n"; };
    return options;
}

fs::path output_dir_for(const std::string& flag, const RunConfig& rc) {
    if (!flag.empty()) return flag;
    if (auto env = provider::process_environment()("COLLOQUY_OUTPUT_DIR")) return *env;
    if (rc.output_dir) return *rc.output_dir;
    return "transcripts";
}

int cmd_run(const std::string& config_path, const std::string& out_flag, const ProviderFlags& flags,
            std::optional<int> turns, std::optional<int> delay_ms) {
    RunConfig rc = load_run_config(config_path);
    if (turns) rc.debate.total_turns = *turns;
    if (delay_ms) rc.debate.inter_turn_delay = std::chrono::milliseconds(*delay_ms);

    orchestrator::PersonaRegistry registry;
    for (auto& p : rc.personas) registry.add(p);

    auto cache = std::make_shared<provider::ResponseCache>(!flags.no_cache);
    auto completer = orchestrator::make_completer(rc.debate, backend_for(flags, &rc), client_options(), cache);

    auto recorder = std::make_shared<persistence::TranscriptRecorder>(output_dir_for(out_flag, rc));
    orchestrator::DebateHooks hooks;
    hooks.on_checkpoint = [recorder](const TranscriptDocument& doc) { (*recorder)(doc); };
    hooks.on_event = [](const orchestrator::DebateEvent& e) {
        if (e.kind == orchestrator::EventKind::TurnCompleted) {
            std::cout << "[" << e.payload["index"].get<int>() << "] "
                      << e.payload["display_name"].get<std::string>() << ": "
                      << e.payload["content"].get<std::string>() << "\n"
                      << std::flush;
        } else if (e.kind == orchestrator::EventKind::Error) {
            std::cerr << "error: " << e.payload["message"].get<std::string>() << "\n";
        }
    };

    auto debate = orchestrator::new_debate(rc.debate, registry, {completer, now_ms}, hooks);
    debate->run();

    std::cerr << "phase: " << to_string(debate->phase()) << "\n"
              << "canonical: " << recorder->canonical_path().string() << "\n"
              << "html: " << recorder->html_path().string() << "\n";
    return debate->phase() == Phase::Failed ? 2 : 0;
}

int cmd_analyze(const std::string& transcript, const std::string& keywords, int limit, bool as_json) {
    auto doc = persistence::load_canonical(transcript);
    auto sets = analysis::read_keywords_file(keywords);
    auto report = analysis::frequency_analysis(doc, sets);
    auto excerpts = analysis::extract_excerpts(doc, sets, limit);
    if (as_json) {
        auto body = analysis::to_json(report);
        auto list = nlohmann::json::array();
        for (const auto& e : excerpts) list.push_back(analysis::to_json(e));
        body["excerpts"] = std::move(list);
        std::cout << body.dump(2) << "\n";
        return 0;
    }
    std::cout << analysis::render_table(report);
    if (!excerpts.empty()) std::cout << "\nExcerpts:\n";
    for (const auto& e : excerpts) {
        std::cout << "  " << doc.display_name(e.persona) << " #" << e.turn_index << ": " << e.excerpt << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& path, bool lenient) {
    auto mode = lenient ? persona::ValidationMode::Lenient : persona::ValidationMode::Strict;
    auto spec = persona::validate_persona(persona::read_persona_file(path), mode);
    for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";
    auto prompt = persona::compile_system_prompt(spec, {"(validation only)"});
    std::cout << spec.id.value << ": " << spec.parameters.size() << " parameters, " << prompt.directive_count
              << " directives\n";
    return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& config_path, const std::string& host, int port, const std::string& out_flag,
              const ProviderFlags& flags, std::optional<int> delay_ms) {
    RunConfig rc = load_run_config(config_path);
    auto backend = backend_for(flags, &rc);
    auto cache = std::make_shared<provider::ResponseCache>(!flags.no_cache);

    service::ServiceOptions options;
    options.completer_factory = [backend, cache](const DebateConfig& config) {
        return orchestrator::make_completer(config, backend, client_options(), cache);
    };
    options.keywords = rc.keywords;
    options.output_dir = output_dir_for(out_flag, rc);
    if (delay_ms) options.delay_override = std::chrono::milliseconds(*delay_ms);

    service::DebateService svc(std::move(options));
    for (auto& p : rc.personas) svc.personas().add(p);

    httplib::Server server;
    service::install_routes(server, svc);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::cerr << "listening on http://" << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    svc.shutdown();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided two-persona debates between LLM agents"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    ProviderFlags flags;
    std::optional<int> turns;
    std::optional<int> delay_ms;

    auto* run = app.add_subcommand("run", "Run a debate headlessly from a run configuration");
    run->add_option("--config", config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Transcript directory (also COLLOQUY_OUTPUT_DIR)");
    run->add_option("--turns", turns, "Override total_turns");
    run->add_option("--delay-ms", delay_ms, "Override the inter-turn delay");
    add_provider_flags(*run, flags);

    std::string transcript;
    std::string keywords;
    int limit = 3;
    bool as_json = false;
    auto* analyze = app.add_subcommand("analyze", "Frequency analysis of a canonical transcript");
    analyze->add_option("transcript", transcript, "Canonical transcript (.json)")->required()->check(CLI::ExistingFile);
    analyze->add_option("--keywords", keywords, "Keyword sets file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--limit", limit, "Excerpts per persona")->check(CLI::PositiveNumber);
    analyze->add_flag("--json", as_json, "Emit the structured report");

    std::string persona_path;
    bool lenient = false;
    auto* validate = app.add_subcommand("validate-persona", "Validate a persona sheet");
    validate->add_option("file", persona_path, "Persona sheet")->required()->check(CLI::ExistingFile);
    validate->add_flag("--lenient", lenient, "Keep unknown parameters with a warning");

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API and event stream");
    serve->add_option("--config", config_path, "Run configuration (personas, keywords)")
        ->required()
        ->check(CLI::ExistingFile);
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--out", out_dir, "Transcript directory (also COLLOQUY_OUTPUT_DIR)");
    serve->add_option("--delay-ms", delay_ms, "Override every debate's inter-turn delay");
    add_provider_flags(*serve, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, out_dir, flags, turns, delay_ms);
        if (*analyze) return cmd_analyze(transcript, keywords, limit, as_json);
        if (*validate) return cmd_validate(persona_path, lenient);
        if (*serve) return cmd_serve(config_path, host, port, out_dir, flags, delay_ms);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
