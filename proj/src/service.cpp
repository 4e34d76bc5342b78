#include "colloquy/service.hpp"

#include <httplib.h>

#include "colloquy/mock_backend.hpp"
#include "colloquy/openai_backend.hpp"

namespace colloquy::service {

using orchestrator::Command;
using orchestrator::CommandKind;

void EventLog::append(DebateEvent event) {
    {
        std::lock_guard lock(mutex_);
        events_.push_back(std::move(event));
    }
    grew_.notify_all();
}

std::vector<DebateEvent> EventLog::since(std::uint64_t from) const {
    std::lock_guard lock(mutex_);
    if (from >= events_.size()) return {};
    return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

bool EventLog::wait_for(std::uint64_t from, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    grew_.wait_for(lock, timeout, [&] { return events_.size() > from || closed_; });
    return events_.size() > from;
}

void EventLog::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    grew_.notify_all();
}

bool EventLog::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

std::uint64_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

std::string sse_frame(const DebateEvent& event) {
    return "id: " + std::to_string(event.sequence) + "\nevent: " + std::string(orchestrator::to_string(event.kind)) +
           "\ndata: " + orchestrator::to_json(event).dump() + "\n\n";
}

DebateService::DebateService(ServiceOptions options) : options_(std::move(options)) {
    if (!options_.completer_factory) throw std::invalid_argument("service needs a completer factory");
}

DebateService::~DebateService() {
    shutdown();
}

DebateService::Entry& DebateService::entry(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = debates_.find(id);
    if (it == debates_.end()) throw NotFound("no debate '" + id + "'");
    return *it->second;
}

const DebateService::Entry& DebateService::entry(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = debates_.find(id);
    if (it == debates_.end()) throw NotFound("no debate '" + id + "'");
    return *it->second;
}

std::string DebateService::create_debate(const nlohmann::json& config_doc,
                                         const std::optional<std::string>& idempotency_key) {
    if (idempotency_key) {
        std::lock_guard lock(mutex_);
        if (auto it = idempotency_.find(*idempotency_key); it != idempotency_.end()) return it->second;
    }

    DebateConfig config;
    try {
        config = debate_config_from_json(config_doc);
    } catch (const std::exception& e) {
        throw InvalidConfig(e.what());
    }
    if (options_.delay_override) config.inter_turn_delay = *options_.delay_override;

    const std::string id = orchestrator::random_debate_id();
    auto item = std::make_unique<Entry>();
    item->events = std::make_shared<EventLog>();
    orchestrator::DebateHooks hooks;
    hooks.on_event = [log = item->events](const DebateEvent& e) { log->append(e); };
    if (options_.output_dir) {
        // One subdirectory per debate: file names only carry the start second.
        item->recorder = std::make_shared<persistence::TranscriptRecorder>(*options_.output_dir / id);
        hooks.on_checkpoint = [rec = item->recorder](const TranscriptDocument& doc) { (*rec)(doc); };
    }
    orchestrator::DebateServices services{options_.completer_factory(config), now_ms};
    item->debate =
        orchestrator::new_debate(std::move(config), personas_, std::move(services), std::move(hooks), id);

    std::lock_guard lock(mutex_);
    if (idempotency_key) {
        // Another request with the same key may have won the race.
        if (auto it = idempotency_.find(*idempotency_key); it != idempotency_.end()) return it->second;
        idempotency_.emplace(*idempotency_key, id);
    }
    debates_.emplace(id, std::move(item));
    return id;
}

Phase DebateService::post_command(const std::string& id, const Command& command) {
    Entry& e = entry(id);
    e.debate->apply_command(command);
    if (command.kind == CommandKind::Start) {
        std::lock_guard lock(mutex_);
        e.worker = std::thread([debate = e.debate, log = e.events] {
            try {
                debate->run();
            } catch (...) {
            }
            log->close();
        });
    } else if (command.kind == CommandKind::End) {
        std::lock_guard lock(mutex_);
        if (!e.worker.joinable()) e.events->close();
    }
    return e.debate->phase();
}

std::shared_ptr<orchestrator::Debate> DebateService::debate(const std::string& id) const {
    return entry(id).debate;
}

std::shared_ptr<EventLog> DebateService::events(const std::string& id) const {
    return entry(id).events;
}

std::vector<std::string> DebateService::debate_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : debates_) ids.push_back(id);
    return ids;
}

analysis::FrequencyReport DebateService::get_analysis(const std::string& id) const {
    return analysis::frequency_analysis(debate(id)->document(), options_.keywords);
}

std::vector<analysis::Excerpt> DebateService::get_excerpts(const std::string& id, int limit) const {
    return analysis::extract_excerpts(debate(id)->document(), options_.keywords, limit);
}

std::optional<std::filesystem::path> DebateService::canonical_path(const std::string& id) const {
    const Entry& e = entry(id);
    if (!e.recorder || e.recorder->canonical_path().empty()) return std::nullopt;
    return e.recorder->canonical_path();
}

void DebateService::shutdown() {
    std::vector<Entry*> all;
    {
        std::lock_guard lock(mutex_);
        for (auto& [_, e] : debates_) all.push_back(e.get());
    }
    for (Entry* e : all) {
        try {
            e->debate->apply_command(Command::end());
        } catch (const orchestrator::IllegalTransition&) {
        }
        if (e->worker.joinable()) e->worker.join();
        e->events->close();
    }
}

BackendSettings settings_from_environment(const provider::EnvLookup& env) {
    BackendSettings s;
    if (auto mock = env("COLLOQUY_MOCK")) s.mock = *mock != "0" && *mock != "false";
    s.base_url = env("COLLOQUY_BASE_URL");
    s.vault_url = env("COLLOQUY_VAULT_URL");
    s.vault_token = env("COLLOQUY_VAULT_TOKEN");
    return s;
}

std::shared_ptr<provider::Backend> make_backend(const BackendSettings& settings, const provider::EnvLookup& env,
                                                const provider::LogSink& log) {
    if (settings.mock) return std::make_shared<provider::MockBackend>();
    std::unique_ptr<provider::SecretStore> vault;
    if (settings.vault_url) vault = std::make_unique<provider::HttpSecretStore>(*settings.vault_url, settings.vault_token);
    auto key = provider::resolve_api_key(env, vault.get(), provider::kApiKeyEnvVar, provider::kApiKeyEnvVar, log);
    provider::OpenAIBackendOptions options;
    if (settings.base_url) options.base_url = *settings.base_url;
    return std::make_shared<provider::OpenAIBackend>(std::move(key), options);
}

// -- HTTP ----------------------------------------------------------------------

namespace {

void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    reply_json(res, status, {{"error", kind}, {"message", message}});
}

std::string_view validation_kind(persona::ValidationError::Kind k) {
    using K = persona::ValidationError::Kind;
    switch (k) {
        case K::OutOfRange: return "OutOfRange";
        case K::DuplicateParameter: return "DuplicateParameter";
        case K::MissingField: return "MissingField";
        case K::UnknownParameter: return "UnknownParameter";
    }
    return "ValidationError";
}

template <class Handler>
auto guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const NotFound& e) {
            reply_error(res, 404, "NotFound", e.what());
        } catch (const orchestrator::UnknownPersona& e) {
            reply_error(res, 404, "UnknownPersona", e.what());
        } catch (const orchestrator::IllegalTransition& e) {
            reply_error(res, 409, "IllegalTransition", e.what());
        } catch (const persona::ValidationError& e) {
            reply_error(res, 400, validation_kind(e.kind()), e.what());
        } catch (const InvalidConfig& e) {
            reply_error(res, 400, "InvalidConfig", e.what());
        } catch (const nlohmann::json::exception& e) {
            reply_error(res, 400, "BadRequest", e.what());
        } catch (const std::invalid_argument& e) {
            reply_error(res, 400, "BadRequest", e.what());
        } catch (const std::exception& e) {
            reply_error(res, 500, "Internal", e.what());
        }
    };
}

nlohmann::json parse_body(const httplib::Request& req) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw std::invalid_argument("request body is not JSON");
    return body;
}

nlohmann::json debate_summary(const orchestrator::Debate& debate) {
    auto state = debate.snapshot();
    auto failure = debate.failure();
    return {{"id", state.id},
            {"phase", to_string(state.phase)},
            {"next_turn_index", state.next_turn_index},
            {"total_turns", state.config.total_turns},
            {"pending_stimuli", state.pending_stimuli.size()},
            {"personas", {state.config.personas[0].value, state.config.personas[1].value}},
            {"failure", failure ? nlohmann::json(*failure) : nlohmann::json(nullptr)}};
}

}  // namespace

void install_routes(httplib::Server& server, DebateService& service) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
        res.status = 204;
    });

    server.Post("/debates", guarded([&](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> key;
        if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
        auto id = service.create_debate(parse_body(req), key);
        reply_json(res, 201, debate_summary(*service.debate(id)));
    }));

    server.Get("/debates", guarded([&](const httplib::Request&, httplib::Response& res) {
        auto list = nlohmann::json::array();
        for (const auto& id : service.debate_ids()) list.push_back(debate_summary(*service.debate(id)));
        reply_json(res, 200, list);
    }));

    server.Get(R"(/debates/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        reply_json(res, 200, debate_summary(*service.debate(req.matches[1])));
    }));

    server.Post(R"(/debates/([^/]+)/commands)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        Command cmd;
        cmd.kind = orchestrator::command_from_string(body.at("command").get<std::string>());
        if (cmd.kind == CommandKind::Inject) cmd.text = body.value("text", std::string{});
        auto phase = service.post_command(req.matches[1], cmd);
        reply_json(res, 202, {{"accepted", true}, {"phase", to_string(phase)}});
    }));

    server.Get(R"(/debates/([^/]+)/transcript)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        res.status = 200;
        res.set_content(persistence::render_canonical(service.debate(req.matches[1])->document()),
                        "application/json");
    }));

    server.Get(R"(/debates/([^/]+)/analysis)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        int limit = req.has_param("limit") ? std::stoi(req.get_param_value("limit")) : 3;
        auto body = analysis::to_json(service.get_analysis(id));
        auto excerpts = nlohmann::json::array();
        for (const auto& e : service.get_excerpts(id, limit)) excerpts.push_back(analysis::to_json(e));
        body["excerpts"] = std::move(excerpts);
        reply_json(res, 200, body);
    }));

    server.Get(R"(/debates/([^/]+)/events)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto log = service.events(req.matches[1]);
        std::uint64_t from = 0;
        if (req.has_param("from")) from = std::stoull(req.get_param_value("from"));
        else if (req.has_header("Last-Event-ID")) from = std::stoull(req.get_header_value("Last-Event-ID")) + 1;

        auto cursor = std::make_shared<std::uint64_t>(from);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [log, cursor](size_t, httplib::DataSink& sink) {
            if (!log->wait_for(*cursor, std::chrono::milliseconds(1000))) {
                if (log->closed()) {
                    sink.done();
                    return true;
                }
                static constexpr std::string_view kKeepAlive = ": keep-alive\n\n";
                return sink.write(kKeepAlive.data(), kKeepAlive.size());
            }
            for (const auto& event : log->since(*cursor)) {
                auto frame = sse_frame(event);
                if (!sink.write(frame.data(), frame.size())) return false;
                *cursor = event.sequence + 1;
            }
            return true;
        });
    }));

    server.Get("/personas", guarded([&](const httplib::Request&, httplib::Response& res) {
        auto list = nlohmann::json::array();
        for (const auto& p : service.personas().list()) list.push_back(persona::to_json(p));
        reply_json(res, 200, list);
    }));

    server.Post("/personas", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto mode = req.has_param("lenient") ? persona::ValidationMode::Lenient : persona::ValidationMode::Strict;
        persona::RawPersona raw;
        try {
            raw = persona::raw_persona_from_json(parse_body(req));
        } catch (const std::runtime_error& e) {
            throw std::invalid_argument(e.what());
        }
        auto spec = persona::validate_persona(raw, mode);
        auto body = persona::to_json(spec);
        body["warnings"] = spec.warnings;
        service.personas().add(std::move(spec));
        reply_json(res, 201, body);
    }));
}

}  // namespace colloquy::service
