#include "colloquy/mock_backend.hpp"

namespace colloquy::provider {

std::string MockBackend::reply_for(const CompletionRequest& request) {
    return "MOCK[" + request.tags.speaker + "|t=" + std::to_string(request.tags.turn_index) +
           "|h=" + cache_key(request).hex().substr(0, 8) + "]";
}

BackendReply MockBackend::call(const CompletionRequest& request) {
    {
        std::lock_guard lock(mutex_);
        requests_.push_back(request);
    }
    return {reply_for(request), FinishReason::Stop};
}

std::size_t MockBackend::call_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
}

std::vector<CompletionRequest> MockBackend::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

FaultSchedule FaultSchedule::seeded(std::uint64_t seed, double failure_rate) {
    FaultSchedule s;
    s.rng_.seed(seed);
    s.rate_ = failure_rate;
    s.use_script_ = false;
    return s;
}

FaultSchedule FaultSchedule::scripted(std::vector<bool> script) {
    FaultSchedule s;
    s.script_ = std::move(script);
    s.use_script_ = true;
    return s;
}

std::optional<ProviderError> FaultSchedule::next() {
    bool fail = false;
    std::uint64_t flavour = 0;
    if (use_script_) {
        fail = position_ < script_.size() && script_[position_];
        flavour = position_;
        ++position_;
    } else {
        std::bernoulli_distribution coin(rate_);
        fail = coin(rng_);
        flavour = rng_();
    }
    if (!fail) return std::nullopt;
    switch (flavour % 3) {
        case 0: return ProviderError(ProviderError::Kind::RateLimited, "injected rate limit", 429);
        case 1: return ProviderError(ProviderError::Kind::Timeout, "injected timeout");
        default: return ProviderError(ProviderError::Kind::BadResponse, "injected server error", 503);
    }
}

BackendReply FaultInjectingBackend::call(const CompletionRequest& request) {
    {
        std::lock_guard lock(mutex_);
        ++attempts_;
        if (auto error = schedule_.next()) {
            ++failures_;
            throw *error;
        }
    }
    return inner_->call(request);
}

std::size_t FaultInjectingBackend::attempts() const {
    std::lock_guard lock(mutex_);
    return attempts_;
}

std::size_t FaultInjectingBackend::failures() const {
    std::lock_guard lock(mutex_);
    return failures_;
}

}  // namespace colloquy::provider
