#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "bmet/corpus/chunker.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/forum/forum.hpp"
#include "bmet/rag/generation.hpp"
#include "bmet/rag/knowledge_base.hpp"

namespace bmet::server {

// Every path is resolved against the directory of the config file.
struct ServerConfig {
    std::string listen_address = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path data_dir = "bmet-data";

    embedding::EmbedderSpec embedder;
    embedding::RemoteEmbedderConfig remote_embedder;
    rag::IndexSettings index;
    corpus::ChunkingPolicy chunking;

    double tau_intent = 0.15;
    double tau_ground = 0.18;
    std::size_t k_default = 5;
    std::size_t answer_budget = 4000;
    std::string code_pattern = R"(^[A-Z]{1,4}-[0-9]{2,3}$)";

    rag::GenerationKind generation = rag::GenerationKind::extractive_local;
    std::filesystem::path prompt_template;
    rag::RemoteLlmConfig llm;

    forum::PromotionRule promotion;

    std::filesystem::path language_profiles;
    std::string default_language = "en";
    std::filesystem::path exemplars;
    std::filesystem::path selftest_dir;
    std::filesystem::path maintenance_dir;
    std::filesystem::path refusal_templates;
    int maintenance_horizon_days = 365;

    bool kiosk_mode = true;
    std::string admin_token;
    std::chrono::seconds token_ttl{86400};
    std::chrono::seconds session_idle{1800};
    bool anonymized_logging = true;
    std::string log_salt;

    // Throws Error(InvalidConfig) for thresholds outside [0, 1] and other
    // out-of-range values.
    void validate() const;
};

// Flat `key = value` lines, '#' comments. Unknown keys raise Error(InvalidConfig).
ServerConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
ServerConfig load_config(const std::filesystem::path& path);
// Inverse of parse_config for the given base directory.
std::string format_config(const ServerConfig& config);

// Creates the data directory if needed and checks that it is writable.
// Throws Error(IoError).
void ensure_writable_dir(const std::filesystem::path& dir);

}  // namespace bmet::server
