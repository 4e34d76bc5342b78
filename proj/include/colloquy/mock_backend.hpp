#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "colloquy/provider.hpp"

namespace colloquy::provider {

/// Deterministic stand-in for a chat-completions endpoint. Replies are a
/// pure function of (speaker, turn index, request digest):
///
///     MOCK[<speaker>|t=<turn index>|h=<first 8 hex digits of cache_key>]
///
/// Every request is recorded for inspection.
class MockBackend final : public Backend {
public:
    BackendReply call(const CompletionRequest& request) override;

    std::size_t call_count() const;
    std::vector<CompletionRequest> requests() const;

    static std::string reply_for(const CompletionRequest& request);

private:
    mutable std::mutex mutex_;
    std::vector<CompletionRequest> requests_;
};

/// Decides, per call, whether the wrapped backend fails with a transient
/// error. Either a seeded Bernoulli schedule or an explicit script
/// (true = fail), after which calls always succeed.
class FaultSchedule {
public:
    static FaultSchedule seeded(std::uint64_t seed, double failure_rate);
    static FaultSchedule scripted(std::vector<bool> script);
    static FaultSchedule never() { return scripted({}); }

    /// Next outcome, and for failures which transient class to raise.
    std::optional<ProviderError> next();

private:
    FaultSchedule() = default;

    std::mt19937_64 rng_;
    double rate_ = 0.0;
    std::vector<bool> script_;
    std::size_t position_ = 0;
    bool use_script_ = true;
};

class FaultInjectingBackend final : public Backend {
public:
    FaultInjectingBackend(std::shared_ptr<Backend> inner, FaultSchedule schedule)
        : inner_(std::move(inner)), schedule_(std::move(schedule)) {}

    BackendReply call(const CompletionRequest& request) override;

    std::size_t attempts() const;
    std::size_t failures() const;

private:
    std::shared_ptr<Backend> inner_;
    mutable std::mutex mutex_;
    FaultSchedule schedule_;
    std::size_t attempts_ = 0;
    std::size_t failures_ = 0;
};

}  // namespace colloquy::provider
