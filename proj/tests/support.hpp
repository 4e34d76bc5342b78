#pragma once

// Shared fixtures for the test binaries.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "colloquy/mock_backend.hpp"
#include "colloquy/orchestrator.hpp"
#include "colloquy/persona.hpp"
#include "colloquy/run_config.hpp"

namespace colloquy::testing {

inline std::string data_path(const std::string& rel) { return std::string(COLLOQUY_DATA_DIR) + "/" + rel; }

inline persona::PersonaSpec load_persona(const std::string& name) {
    return persona::validate_persona(persona::read_persona_file(data_path("personas/" + name + ".yaml")));
}

/// Anne and John, loaded once.
inline const orchestrator::PersonaRegistry& reference_registry() {
    static const auto* registry = [] {
        auto* r = new orchestrator::PersonaRegistry;
        r->add(load_persona("anne"));
        r->add(load_persona("john"));
        return r;
    }();
    return *registry;
}

inline const std::string kOpeningQuestion =
    "We, CFOs, are having difficulty adapting to highly volatile economic conditions. But it is important "
    "to look for innovative ways to maintain growth and profitability. Do you agree?";

/// Anne opens against John with no pacing delay.
inline DebateConfig fast_config(int total_turns) {
    DebateConfig c;
    c.personas = {PersonaId{"anne"}, PersonaId{"john"}};
    c.business_context = "Two CFOs discuss strategy under market volatility.";
    c.opening_question = kOpeningQuestion;
    c.opening_speaker = PersonaId{"anne"};
    c.total_turns = total_turns;
    c.inter_turn_delay = std::chrono::milliseconds(0);
    return c;
}

/// Monotonic fake clock starting at 2024-03-01T12:00:00Z, 1 s per reading.
inline std::function<Timestamp()> fake_clock() {
    auto tick = std::make_shared<std::atomic<std::int64_t>>(0);
    return [tick] {
        using namespace std::chrono;
        return Timestamp(sys_days(year{2024} / March / 1) + hours(12)) + seconds(tick->fetch_add(1));
    };
}

inline provider::ClientOptions no_sleep_options() {
    provider::ClientOptions options;
    options.sleep = [](std::chrono::milliseconds) {};
    return options;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("colloquy-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace colloquy::testing
