#include "bmet/tools/self_test.hpp"

#include <algorithm>
#include <set>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::tools {

SelfTestScript parse_selftest_script(std::string_view text, std::string device_model) {
    SelfTestScript script;
    script.device_model = std::move(device_model);
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t, '|');
        if (fields.size() != 3)
            throw Error(Errc::InvalidArgument, "self-test line " + std::to_string(line_no) + ": expected 3 fields");
        SelfTestStep step{std::string(trim(fields[0])), std::string(trim(fields[1])), std::string(trim(fields[2]))};
        if (step.step_id.empty() || step.instruction.empty())
            throw Error(Errc::InvalidArgument, "self-test line " + std::to_string(line_no) + ": empty field");
        if (!seen.insert(step.step_id).second)
            throw Error(Errc::InvalidArgument, "self-test step id repeated: " + step.step_id);
        script.steps.push_back(std::move(step));
    }
    return script;
}

void SelfTestLibrary::add(SelfTestScript script) {
    auto model = script.device_model;
    scripts_[model] = std::make_shared<const SelfTestScript>(std::move(script));
}

void SelfTestLibrary::load_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& ent : std::filesystem::directory_iterator(dir)) {
        if (ent.is_regular_file() && ent.path().extension() == ".txt") files.push_back(ent.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add(parse_selftest_script(read_file(f), f.stem().string()));
}

std::shared_ptr<const SelfTestScript> SelfTestLibrary::find(std::string_view device_model) const {
    auto it = scripts_.find(device_model);
    if (it == scripts_.end())
        throw Error(Errc::NoScriptForModel, "no self-test script for " + std::string(device_model));
    return it->second;
}

bool SelfTestLibrary::has(std::string_view device_model) const { return scripts_.find(device_model) != scripts_.end(); }

std::vector<std::string> SelfTestLibrary::models() const {
    std::vector<std::string> out;
    for (const auto& [m, _] : scripts_) out.push_back(m);
    return out;
}

std::string_view step_result_name(StepResult r) noexcept {
    switch (r) {
        case StepResult::pass: return "pass";
        case StepResult::fail: return "fail";
        case StepResult::skipped: return "skipped";
    }
    return "skipped";
}

std::optional<StepResult> parse_step_result(std::string_view s) noexcept {
    if (s == "pass") return StepResult::pass;
    if (s == "fail") return StepResult::fail;
    if (s == "skipped" || s == "skip") return StepResult::skipped;
    return std::nullopt;
}

std::string_view session_state_name(SessionState s) noexcept {
    return s == SessionState::complete ? "complete" : "in_progress";
}

SelfTestSession::SelfTestSession(std::string session_id, std::shared_ptr<const SelfTestScript> script)
    : session_id_(std::move(session_id)), script_(std::move(script)) {}

const SelfTestStep* SelfTestSession::current_step() const noexcept {
    return complete() ? nullptr : &script_->steps[cursor_];
}

std::variant<SelfTestStep, SelfTestReport> SelfTestSession::advance(StepResult result) {
    if (complete()) throw Error(Errc::SessionComplete, "self-test session " + session_id_ + " is complete");
    results_[script_->steps[cursor_].step_id] = result;
    ++cursor_;
    if (complete()) return report();
    return script_->steps[cursor_];
}

SelfTestReport SelfTestSession::report() const {
    SelfTestReport r;
    r.device_model = script_->device_model;
    for (std::size_t i = 0; i < cursor_; ++i) {
        const auto& step = script_->steps[i];
        auto res = results_.at(step.step_id);
        switch (res) {
            case StepResult::pass: ++r.passed; break;
            case StepResult::fail: ++r.failed; break;
            case StepResult::skipped: ++r.skipped; break;
        }
        r.trace.push_back({i + 1, step, res});
    }
    return r;
}

SelfTestManager::SelfTestManager(std::shared_ptr<const SelfTestLibrary> library) : library_(std::move(library)) {}

SelfTestSession SelfTestManager::start(std::string_view device_model) {
    auto session = start_self_test(*library_, device_model);
    auto s = std::make_shared<Slot>(session);
    std::lock_guard lock(mu_);
    sessions_.emplace(session.session_id(), std::move(s));
    return session;
}

std::shared_ptr<SelfTestManager::Slot> SelfTestManager::slot(std::string_view session_id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(Errc::UnknownSession, "unknown self-test session");
    return it->second;
}

std::variant<SelfTestStep, SelfTestReport> SelfTestManager::advance(std::string_view session_id, StepResult result) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->session.advance(result);
}

SelfTestSession SelfTestManager::get(std::string_view session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->session;
}

SelfTestSession start_self_test(const SelfTestLibrary& library, std::string_view device_model) {
    return SelfTestSession(random_hex(16), library.find(device_model));
}

}  // namespace bmet::tools
