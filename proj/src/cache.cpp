#include "colloquy/cache.hpp"

namespace colloquy::provider {

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::size_t ResponseCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t ResponseCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

void ResponseCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
    hits_ = misses_ = 0;
}

CompletionResult cached_complete(ResponseCache& cache, Completer& upstream, const CompletionRequest& request) {
    if (!cache.enabled_) return upstream.complete(request);

    const CacheKey key = cache_key(request);
    std::promise<CompletionResult> promise;
    {
        std::unique_lock lock(cache.mutex_);
        if (auto it = cache.entries_.find(key); it != cache.entries_.end()) {
            ++cache.hits_;
            return it->second;
        }
        if (auto it = cache.in_flight_.find(key); it != cache.in_flight_.end()) {
            ++cache.hits_;
            auto shared = it->second;
            lock.unlock();
            return shared.get();
        }
        ++cache.misses_;
        cache.in_flight_.emplace(key, promise.get_future().share());
    }

    try {
        CompletionResult result = upstream.complete(request);
        {
            std::lock_guard lock(cache.mutex_);
            cache.entries_.emplace(key, result);
            cache.in_flight_.erase(key);
        }
        promise.set_value(result);
        return result;
    } catch (...) {
        {
            std::lock_guard lock(cache.mutex_);
            cache.in_flight_.erase(key);
        }
        promise.set_exception(std::current_exception());
        throw;
    }
}

}  // namespace colloquy::provider
