#include "colloquy/orchestrator.hpp"

#include <random>

namespace colloquy::orchestrator {

using provider::ChatMessage;
using provider::Role;

void PersonaRegistry::add(persona::PersonaSpec spec) {
    std::lock_guard lock(mutex_);
    auto id = spec.id;
    personas_.insert_or_assign(std::move(id), std::move(spec));
}

std::optional<persona::PersonaSpec> PersonaRegistry::find(const PersonaId& id) const {
    std::lock_guard lock(mutex_);
    if (auto it = personas_.find(id); it != personas_.end()) return it->second;
    return std::nullopt;
}

std::vector<persona::PersonaSpec> PersonaRegistry::list() const {
    std::lock_guard lock(mutex_);
    std::vector<persona::PersonaSpec> out;
    for (const auto& [_, spec] : personas_) out.push_back(spec);
    return out;
}

std::string_view to_string(CommandKind kind) noexcept {
    switch (kind) {
        case CommandKind::Start: return "start";
        case CommandKind::Pause: return "pause";
        case CommandKind::Resume: return "resume";
        case CommandKind::Inject: return "inject";
        case CommandKind::End: return "end";
    }
    return "end";
}

CommandKind command_from_string(std::string_view text) {
    for (auto k : {CommandKind::Start, CommandKind::Pause, CommandKind::Resume, CommandKind::Inject,
                   CommandKind::End}) {
        if (to_string(k) == text) return k;
    }
    throw std::invalid_argument("unknown command '" + std::string(text) + "'");
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::TurnCompleted: return "TurnCompleted";
        case EventKind::PhaseChanged: return "PhaseChanged";
        case EventKind::StimulusInjected: return "StimulusInjected";
        case EventKind::Error: return "Error";
    }
    return "Error";
}

nlohmann::json to_json(const DebateEvent& e) {
    return {{"debate_id", e.debate_id},
            {"sequence", e.sequence},
            {"kind", to_string(e.kind)},
            {"phase", to_string(e.phase)},
            {"payload", e.payload}};
}

const PersonaId& speaker_for(int index, const DebateConfig& config) {
    return config.personas[static_cast<std::size_t>(index % 2)];
}

namespace {

std::array<persona::CompiledPrompt, 2> compile_both(const std::array<persona::PersonaSpec, 2>& personas,
                                                    const DebateConfig& config) {
    persona::BusinessContext context{config.business_context};
    return {persona::compile_system_prompt(personas[0], context),
            persona::compile_system_prompt(personas[1], context)};
}

}  // namespace

Debate::Debate(std::string id, DebateConfig config, std::array<persona::PersonaSpec, 2> personas,
               DebateServices services, DebateHooks hooks)
    : id_(std::move(id)),
      config_(std::move(config)),
      personas_(std::move(personas)),
      prompts_(compile_both(personas_, config_)),
      services_(std::move(services)),
      hooks_(std::move(hooks)),
      budget_(config_.total_turns) {
    check(config_);
    if (personas_[0].id != config_.personas[0] || personas_[1].id != config_.personas[1]) {
        throw std::invalid_argument("persona specs do not match the configured pair");
    }
    if (!services_.completer) throw std::invalid_argument("debate needs a completer");
    if (!services_.clock) services_.clock = now_ms;
    started_at_ = services_.clock();
}

const persona::PersonaSpec& Debate::persona_spec(const PersonaId& id) const {
    return personas_[0].id == id ? personas_[0] : personas_[1];
}

const persona::CompiledPrompt& Debate::system_prompt(const PersonaId& id) const {
    if (personas_[0].id == id) return prompts_[0];
    if (personas_[1].id == id) return prompts_[1];
    throw UnknownPersona(id);
}

Phase Debate::phase() const {
    std::lock_guard lock(mutex_);
    return phase_;
}

std::optional<std::string> Debate::failure() const {
    std::lock_guard lock(mutex_);
    return failure_;
}

DebateState Debate::snapshot() const {
    std::lock_guard lock(mutex_);
    DebateState s;
    s.id = id_;
    s.config = config_;
    s.phase = phase_;
    s.turns = turns_;
    s.pending_stimuli.assign(pending_.begin(), pending_.end());
    s.next_turn_index = static_cast<int>(turns_.size());
    s.events = log_;
    return s;
}

TranscriptDocument Debate::document() const {
    std::lock_guard lock(mutex_);
    return document_locked();
}

TranscriptDocument Debate::document_locked() const {
    TranscriptDocument doc;
    doc.debate_id = id_;
    doc.config = config_;
    doc.participants = {{personas_[0].id, personas_[0].display_name}, {personas_[1].id, personas_[1].display_name}};
    doc.model_id = config_.decoding.model_id;
    doc.started_at = started_at_;
    doc.ended_at = ended_at_;
    doc.phase = phase_;
    doc.turns = turns_;
    doc.events = log_;
    return doc;
}

void Debate::emit(EventKind kind, nlohmann::json payload) {
    DebateEvent event{id_, next_sequence_++, kind, phase_, std::move(payload)};
    if (hooks_.on_event) hooks_.on_event(event);
}

void Debate::log(std::string kind, std::string text) {
    log_.push_back({std::move(kind), std::move(text), static_cast<int>(turns_.size()), services_.clock()});
}

void Debate::checkpoint() {
    if (hooks_.on_checkpoint) hooks_.on_checkpoint(document_locked());
}

void Debate::transition(Phase to, std::string_view log_kind, std::string text) {
    const Phase from = phase_;
    phase_ = to;
    if (to == Phase::Ended || to == Phase::Failed) ended_at_ = services_.clock();
    log(std::string(log_kind), std::move(text));
    emit(EventKind::PhaseChanged, {{"from", to_string(from)}, {"to", to_string(to)}});
    if (to == Phase::Ended || to == Phase::Failed) checkpoint();
    changed_.notify_all();
}

void Debate::apply_command(const Command& command) {
    std::lock_guard lock(mutex_);
    const bool terminal = phase_ == Phase::Ended || phase_ == Phase::Failed;
    switch (command.kind) {
        case CommandKind::Start:
            if (phase_ != Phase::Created) throw IllegalTransition(phase_, command.kind);
            transition(Phase::Running, "start", {});
            return;
        case CommandKind::Pause:
            if (phase_ != Phase::Running) throw IllegalTransition(phase_, command.kind);
            transition(Phase::Paused, "pause", {});
            return;
        case CommandKind::Resume:
            if (phase_ != Phase::Paused) throw IllegalTransition(phase_, command.kind);
            transition(Phase::Running, "resume", {});
            return;
        case CommandKind::End:
            if (terminal) throw IllegalTransition(phase_, command.kind);
            transition(Phase::Ended, "end", {});
            return;
        case CommandKind::Inject: {
            if (terminal) throw IllegalTransition(phase_, command.kind);
            if (command.text.empty()) throw std::invalid_argument("inject needs non-empty text");
            const int at = static_cast<int>(turns_.size());
            pending_.push_back({command.text, at, "human"});
            log("inject", command.text);
            emit(EventKind::StimulusInjected, {{"text", command.text}, {"injected_at_turn", at}, {"author", "human"}});
            changed_.notify_all();
            return;
        }
    }
}

provider::CompletionRequest Debate::build_request(int index, const PersonaId& speaker) {
    const auto& self = persona_spec(speaker);
    const auto& other = persona_spec(speaker == personas_[0].id ? personas_[1].id : personas_[0].id);

    auto as_message = [&](const Turn& t) {
        if (t.speaker == speaker) return ChatMessage{Role::Assistant, t.content};
        return ChatMessage{Role::User, persona_spec(t.speaker).display_name + ": " + t.content};
    };

    provider::CompletionRequest req;
    req.model_id = config_.decoding.model_id;
    req.decoding = persona::decoding_params_for(config_.decoding, self);
    req.tags = {speaker.value, index};
    req.messages.push_back({Role::System, system_prompt(speaker).system_text});

    // The opening question always stays in view, followed by a sliding window.
    req.messages.push_back(as_message(turns_.front()));
    const int first = std::max(1, index - config_.history_window);
    for (int i = first; i < index; ++i) req.messages.push_back(as_message(turns_[static_cast<std::size_t>(i)]));

    while (!pending_.empty()) {
        auto stimulus = std::move(pending_.front());
        pending_.pop_front();
        req.messages.push_back({Role::User, "[Human orchestrator interjection] " + stimulus.text});
        log("stimulus_consumed", stimulus.text);
    }

    req.messages.push_back({Role::User, "Turn " + std::to_string(index) + ": reply to " + other.display_name +
                                            " as " + self.display_name + ", staying in character."});
    return req;
}

Turn Debate::advance(std::unique_lock<std::mutex>& lock) {
    if (phase_ != Phase::Running) throw std::logic_error("next_turn requires a running debate");
    if (in_flight_) throw std::logic_error("a turn is already in progress");
    const int index = static_cast<int>(turns_.size());
    if (index >= budget_) throw std::logic_error("turn budget exhausted");

    const PersonaId speaker = speaker_for(index, config_);
    Turn turn;
    turn.index = index;
    turn.speaker = speaker;

    if (index == 0) {
        turn.content = config_.opening_question;
        turn.attempt_count = 0;
    } else {
        auto request = build_request(index, speaker);
        in_flight_ = true;
        lock.unlock();
        provider::CompletionResult result;
        try {
            if (hooks_.on_prompt) hooks_.on_prompt(request);
            ++provider_calls_;
            result = services_.completer->complete(request);
        } catch (const std::exception& e) {
            lock.lock();
            in_flight_ = false;
            failure_ = e.what();
            nlohmann::json payload = {{"message", e.what()}, {"turn", index}};
            if (const auto* pe = dynamic_cast<const provider::ProviderError*>(&e)) {
                payload["kind"] = provider::to_string(pe->kind());
                payload["attempt_count"] = pe->attempt_count();
            }
            log("error", e.what());
            emit(EventKind::Error, std::move(payload));
            transition(Phase::Failed, "failed", e.what());
            throw;
        }
        lock.lock();
        in_flight_ = false;
        turn.content = std::move(result.content);
        turn.finish_reason = result.finish_reason;
        turn.attempt_count = result.attempt_count;
    }
    turn.timestamp = services_.clock();
    turns_.push_back(turn);

    nlohmann::json payload = to_json(turn);
    payload["display_name"] = persona_spec(speaker).display_name;
    emit(EventKind::TurnCompleted, std::move(payload));
    checkpoint();

    if (static_cast<int>(turns_.size()) >= budget_ && phase_ == Phase::Running) {
        transition(Phase::Ended, "budget_exhausted", std::to_string(budget_));
    }
    wait_between_turns(lock);
    return turn;
}

void Debate::wait_between_turns(std::unique_lock<std::mutex>& lock) {
    if (config_.inter_turn_delay.count() <= 0) return;
    if (phase_ == Phase::Ended || phase_ == Phase::Failed) return;
    // Interruptible so that End does not have to sit out the delay.
    changed_.wait_for(lock, config_.inter_turn_delay,
                      [&] { return phase_ == Phase::Ended || phase_ == Phase::Failed; });
}

Turn Debate::next_turn() {
    std::unique_lock lock(mutex_);
    return advance(lock);
}

Debate::StepOutcome Debate::step() {
    std::unique_lock lock(mutex_);
    if (phase_ == Phase::Ended || phase_ == Phase::Failed) return StepOutcome::Finished;
    if (phase_ != Phase::Running) return StepOutcome::Idle;
    if (static_cast<int>(turns_.size()) >= budget_) {
        transition(Phase::Ended, "budget_exhausted", std::to_string(budget_));
        return StepOutcome::Finished;
    }
    try {
        advance(lock);
    } catch (const std::exception&) {
        return StepOutcome::Finished;
    }
    return StepOutcome::TurnCompleted;
}

std::vector<Turn> Debate::run(std::optional<int> budget) {
    {
        std::unique_lock lock(mutex_);
        if (phase_ != Phase::Created && phase_ != Phase::Running) {
            throw std::logic_error("run requires a Created or Running debate, not " + std::string(to_string(phase_)));
        }
        if (budget) {
            if (*budget < 0) throw std::invalid_argument("turn budget must not be negative");
            budget_ = *budget;
        }
        if (phase_ == Phase::Created) transition(Phase::Running, "start", {});
    }

    for (;;) {
        std::unique_lock lock(mutex_);
        changed_.wait(lock, [&] { return phase_ != Phase::Paused; });
        if (phase_ != Phase::Running) break;
        if (static_cast<int>(turns_.size()) >= budget_) {
            transition(Phase::Ended, "budget_exhausted", std::to_string(budget_));
            break;
        }
        Turn turn;
        try {
            turn = advance(lock);
        } catch (const std::exception&) {
            break;  // Failed; the partial transcript is kept
        }
        lock.unlock();
        if (hooks_.after_turn) hooks_.after_turn(turn);
    }

    std::lock_guard lock(mutex_);
    return turns_;
}

void Debate::wait_until_finished() const {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] { return phase_ == Phase::Ended || phase_ == Phase::Failed; });
}

std::shared_ptr<provider::Completer> make_completer(const DebateConfig& config,
                                                    std::shared_ptr<provider::Backend> backend,
                                                    provider::ClientOptions options,
                                                    std::shared_ptr<provider::ResponseCache> cache) {
    options.retry.limit = config.retry_limit;
    auto client = std::make_shared<provider::ChatClient>(std::move(backend), std::move(options));
    if (!cache) return client;
    return std::make_shared<provider::CachedCompleter>(std::move(client), std::move(cache));
}

std::string random_debate_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string id = "d-";
    auto bits = rng();
    for (int i = 0; i < 16; ++i) {
        id.push_back(kDigits[bits & 0xf]);
        bits >>= 4;
    }
    return id;
}

std::shared_ptr<Debate> new_debate(DebateConfig config, const PersonaRegistry& registry, DebateServices services,
                                   DebateHooks hooks, std::string id) {
    check(config);
    if (config.opening_speaker == config.personas[1]) std::swap(config.personas[0], config.personas[1]);

    auto first = registry.find(config.personas[0]);
    if (!first) throw UnknownPersona(config.personas[0]);
    auto second = registry.find(config.personas[1]);
    if (!second) throw UnknownPersona(config.personas[1]);

    if (id.empty()) id = random_debate_id();
    return std::make_shared<Debate>(std::move(id), std::move(config),
                                    std::array<persona::PersonaSpec, 2>{std::move(*first), std::move(*second)},
                                    std::move(services), std::move(hooks));
}

}  // namespace colloquy::orchestrator
