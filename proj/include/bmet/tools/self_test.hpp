#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bmet::tools {

struct SelfTestStep {
    std::string step_id;
    std::string instruction;
    std::string expected;

    bool operator==(const SelfTestStep&) const = default;
};

struct SelfTestScript {
    std::string device_model;
    std::vector<SelfTestStep> steps;
};

// One `step_id | instruction | expected` record per line, '#' comments. Throws
// Error(InvalidArgument) on a malformed line or a repeated step id.
SelfTestScript parse_selftest_script(std::string_view text, std::string device_model);

// Per-device script files named <device_model>.txt.
class SelfTestLibrary {
public:
    void add(SelfTestScript script);
    void load_dir(const std::filesystem::path& dir);
    // Throws Error(NoScriptForModel).
    std::shared_ptr<const SelfTestScript> find(std::string_view device_model) const;
    bool has(std::string_view device_model) const;
    std::vector<std::string> models() const;

private:
    std::map<std::string, std::shared_ptr<const SelfTestScript>, std::less<>> scripts_;
};

enum class StepResult { pass, fail, skipped };
enum class SessionState { in_progress, complete };

std::string_view step_result_name(StepResult r) noexcept;
std::optional<StepResult> parse_step_result(std::string_view s) noexcept;
std::string_view session_state_name(SessionState s) noexcept;

struct TraceLine {
    std::size_t index = 0;  // 1-based position in the script
    SelfTestStep step;
    StepResult result = StepResult::skipped;
};

struct SelfTestReport {
    std::string device_model;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;
    std::vector<TraceLine> trace;
};

// Cursor over a script. Advancing past the final step raises SessionComplete.
class SelfTestSession {
public:
    SelfTestSession(std::string session_id, std::shared_ptr<const SelfTestScript> script);

    const std::string& session_id() const noexcept { return session_id_; }
    const SelfTestScript& script() const noexcept { return *script_; }
    std::size_t cursor() const noexcept { return cursor_; }
    SessionState state() const noexcept {
        return cursor_ == script_->steps.size() ? SessionState::complete : SessionState::in_progress;
    }
    bool complete() const noexcept { return state() == SessionState::complete; }
    const std::map<std::string, StepResult>& results() const noexcept { return results_; }

    // nullptr when complete.
    const SelfTestStep* current_step() const noexcept;
    // Records the result for the current step. Returns the next step, or the
    // final report once the last step is recorded.
    std::variant<SelfTestStep, SelfTestReport> advance(StepResult result);
    SelfTestReport report() const;

private:
    std::string session_id_;
    std::shared_ptr<const SelfTestScript> script_;
    std::size_t cursor_ = 0;
    std::map<std::string, StepResult> results_;
};

// Owns live sessions; each session is touched under its own lock.
class SelfTestManager {
public:
    explicit SelfTestManager(std::shared_ptr<const SelfTestLibrary> library);

    // Throws Error(NoScriptForModel).
    SelfTestSession start(std::string_view device_model);
    // Throws Error(UnknownSession) or Error(SessionComplete).
    std::variant<SelfTestStep, SelfTestReport> advance(std::string_view session_id, StepResult result);
    SelfTestSession get(std::string_view session_id) const;

private:
    struct Slot {
        explicit Slot(SelfTestSession s) : session(std::move(s)) {}
        std::mutex mu;
        SelfTestSession session;
    };
    std::shared_ptr<Slot> slot(std::string_view session_id) const;

    std::shared_ptr<const SelfTestLibrary> library_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
};

// Starts a standalone session with a fresh random id.
SelfTestSession start_self_test(const SelfTestLibrary& library, std::string_view device_model);

}  // namespace bmet::tools
