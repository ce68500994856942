#include "bmet/server/state.hpp"

#include <json.hpp>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::server {

using Json = nlohmann::json;

std::string_view role_name(Role r) noexcept { return r == Role::admin ? "admin" : "technician"; }

std::optional<Role> parse_role(std::string_view s) noexcept {
    if (s == "admin") return Role::admin;
    if (s == "technician") return Role::technician;
    return std::nullopt;
}

TokenStore::TokenStore(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {}

void TokenStore::set_admin_token(std::string token) {
    std::unique_lock lock(mu_);
    admin_token_ = std::move(token);
}

IssuedToken TokenStore::issue(const std::string& technician_id, Role role) {
    if (trim(technician_id).empty()) throw Error(Errc::InvalidArgument, "technician_id is empty");
    IssuedToken t{random_hex(32), clock_() + std::chrono::duration_cast<std::chrono::milliseconds>(ttl_)};
    std::unique_lock lock(mu_);
    tokens_[t.token] = Entry{Identity{technician_id, role}, t.expires_at};
    return t;
}

Identity TokenStore::authenticate(std::string_view token) const {
    if (token.empty()) throw Error(Errc::InvalidToken, "missing bearer token");
    std::shared_lock lock(mu_);
    if (!admin_token_.empty() && token == admin_token_) return Identity{"admin", Role::admin};
    auto it = tokens_.find(token);
    if (it == tokens_.end()) throw Error(Errc::InvalidToken, "unknown token");
    if (clock_() >= it->second.expires_at) throw Error(Errc::Expired, "token expired");
    return it->second.identity;
}

void TokenStore::revoke(std::string_view token) {
    std::unique_lock lock(mu_);
    if (auto it = tokens_.find(token); it != tokens_.end()) tokens_.erase(it);
}

SessionStore::SessionStore(std::chrono::seconds idle, Clock clock) : idle_(idle), clock_(std::move(clock)) {}

Session SessionStore::create(std::string actor, std::optional<std::string> device_model) {
    auto now = clock_();
    Session s{"sess-" + random_hex(12), std::move(actor), std::move(device_model), now, now};
    std::lock_guard lock(mu_);
    sessions_[s.session_id] = s;
    return s;
}

Session SessionStore::touch(std::string_view session_id, const std::optional<std::string>& device_model) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(Errc::UnknownSession, std::string(session_id));
    auto now = clock_();
    if (now - it->second.last_seen > idle_) {
        sessions_.erase(it);
        throw Error(Errc::Expired, "session " + std::string(session_id) + " expired");
    }
    it->second.last_seen = now;
    if (device_model) it->second.device_model = device_model;
    return it->second;
}

std::size_t SessionStore::sweep() {
    std::lock_guard lock(mu_);
    auto now = clock_();
    return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second.last_seen > idle_; });
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

InteractionLog::InteractionLog(std::filesystem::path path) : path_(std::move(path)) {
    // A torn final line from a crash gets its own line break first.
    if (std::filesystem::exists(path_)) {
        auto text = read_file(path_);
        out_.open(path_, std::ios::app | std::ios::binary);
        if (!text.empty() && text.back() != '\n') out_ << '\n';
    } else {
        out_.open(path_, std::ios::app | std::ios::binary);
    }
    if (!out_) throw Error(Errc::IoError, "cannot open " + path_.string());
}

void InteractionLog::append(const InteractionRecord& r) {
    Json j{{"timestamp", format_iso8601(r.at)},
           {"actor", r.actor},
           {"session", r.session},
           {"query", r.query},
           {"answer_id", r.answer_id},
           {"kind", r.kind},
           {"intent", r.intent},
           {"grounded", r.grounded},
           {"citations", r.citations},
           {"latency_ms", r.latency_ms}};
    auto line = j.dump() + "\n";
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
}

std::string InteractionLog::export_all() const {
    std::lock_guard lock(mu_);
    return std::filesystem::exists(path_) ? read_file(path_) : std::string{};
}

AnswerLog::AnswerLog(std::filesystem::path path) {
    if (std::filesystem::exists(path)) {
        auto text = read_file(path);
        for (auto line : split_lines(text)) {
            auto id = trim(line);
            // A torn tail is shorter than a full id.
            if (id.size() == 28 && id.substr(0, 4) == "ans-") ids_.emplace(id);
        }
    }
    // Compacted rewrite drops any torn tail.
    std::string all;
    for (const auto& id : ids_) all += id + "\n";
    write_file_atomic(path, all);
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_) throw Error(Errc::IoError, "cannot open " + path.string());
}

bool AnswerLog::add(const std::string& answer_id) {
    std::unique_lock lock(mu_);
    if (!ids_.insert(answer_id).second) return false;
    if (out_.is_open()) {
        out_ << answer_id << '\n';
        out_.flush();
    }
    return true;
}

bool AnswerLog::contains(std::string_view answer_id) const {
    std::shared_lock lock(mu_);
    return ids_.find(answer_id) != ids_.end();
}

std::size_t AnswerLog::size() const {
    std::shared_lock lock(mu_);
    return ids_.size();
}

}  // namespace bmet::server
