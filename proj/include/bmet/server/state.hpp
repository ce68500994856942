#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bmet/common/time.hpp"

namespace bmet::server {

enum class Role { technician, admin };
std::string_view role_name(Role r) noexcept;
std::optional<Role> parse_role(std::string_view s) noexcept;

struct Identity {
    std::string technician_id;
    Role role = Role::technician;
    bool admin() const noexcept { return role == Role::admin; }
};

struct IssuedToken {
    std::string token;
    Timestamp expires_at{};
};

// Bearer tokens held in memory; a restart invalidates them. The configured
// admin token is a static credential that never expires.
class TokenStore {
public:
    TokenStore(std::chrono::seconds ttl, Clock clock = system_clock());

    void set_admin_token(std::string token);
    // 32 random bytes, hex encoded.
    IssuedToken issue(const std::string& technician_id, Role role = Role::technician);
    // Throws Error(InvalidToken) or Error(Expired).
    Identity authenticate(std::string_view token) const;
    void revoke(std::string_view token);

private:
    struct Entry {
        Identity identity;
        Timestamp expires_at;
    };
    std::chrono::seconds ttl_;
    Clock clock_;
    std::string admin_token_;
    mutable std::shared_mutex mu_;
    std::map<std::string, Entry, std::less<>> tokens_;
};

struct Session {
    std::string session_id;
    std::string actor;  // hashed when anonymized logging is on
    std::optional<std::string> device_model;
    Timestamp created_at{};
    Timestamp last_seen{};
};

// Conversation sessions with idle expiry. The device slot carries the model
// across queries.
class SessionStore {
public:
    SessionStore(std::chrono::seconds idle, Clock clock = system_clock());

    Session create(std::string actor, std::optional<std::string> device_model = std::nullopt);
    // Refreshes last_seen and, when given, replaces the device slot.
    // Throws Error(UnknownSession) or Error(Expired) (the session is dropped).
    Session touch(std::string_view session_id, const std::optional<std::string>& device_model = std::nullopt);
    std::size_t sweep();  // drops idle sessions, returns how many
    std::size_t size() const;

private:
    std::chrono::seconds idle_;
    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, Session, std::less<>> sessions_;
};

struct InteractionRecord {
    Timestamp at{};
    std::string actor;    // already hashed by the caller when anonymized
    std::string session;  // likewise
    std::string query;
    std::string answer_id;
    std::string kind;
    std::string intent;
    bool grounded = false;
    std::vector<std::string> citations;
    double latency_ms = 0.0;
};

// Append-only JSONL log; one writer at a time.
class InteractionLog {
public:
    explicit InteractionLog(std::filesystem::path path);
    void append(const InteractionRecord& r);
    std::string export_all() const;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::ofstream out_;
};

// Ids of every answer served, so feedback can name them as targets.
class AnswerLog {
public:
    AnswerLog() = default;
    explicit AnswerLog(std::filesystem::path path);
    // True when the id was new.
    bool add(const std::string& answer_id);
    bool contains(std::string_view answer_id) const;
    std::size_t size() const;

private:
    mutable std::shared_mutex mu_;
    std::set<std::string, std::less<>> ids_;
    std::ofstream out_;
};

}  // namespace bmet::server
