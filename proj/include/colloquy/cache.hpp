#pragma once

#include <cstddef>
#include <future>
#include <map>
#include <memory>
#include <mutex>

#include "colloquy/provider.hpp"

namespace colloquy::provider {

/// Completion results keyed by request digest. Concurrent misses on the
/// same key share one upstream call.
class ResponseCache {
public:
    explicit ResponseCache(bool enabled = true) : enabled_(enabled) {}

    bool enabled() const noexcept { return enabled_; }
    std::size_t size() const;
    std::size_t hits() const;
    std::size_t misses() const;
    void clear();

    friend CompletionResult cached_complete(ResponseCache& cache, Completer& upstream,
                                            const CompletionRequest& request);

private:
    bool enabled_;
    mutable std::mutex mutex_;
    std::map<CacheKey, CompletionResult> entries_;
    std::map<CacheKey, std::shared_future<CompletionResult>> in_flight_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/// Hit: stored result, no upstream call. Miss: delegates and stores.
/// Disabled cache: plain pass-through. Upstream errors propagate and are
/// not cached.
CompletionResult cached_complete(ResponseCache& cache, Completer& upstream, const CompletionRequest& request);

/// Completer adaptor that routes every request through a cache.
class CachedCompleter final : public Completer {
public:
    CachedCompleter(std::shared_ptr<Completer> upstream, std::shared_ptr<ResponseCache> cache)
        : upstream_(std::move(upstream)), cache_(std::move(cache)) {}

    CompletionResult complete(const CompletionRequest& request) override {
        return cached_complete(*cache_, *upstream_, request);
    }

private:
    std::shared_ptr<Completer> upstream_;
    std::shared_ptr<ResponseCache> cache_;
};

}  // namespace colloquy::provider
