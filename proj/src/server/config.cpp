#include "bmet/server/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::server {

void ServerConfig::validate() const {
    auto unit = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::InvalidConfig, std::string(name) + " must lie in [0, 1]");
    };
    unit(tau_intent, "tau_intent");
    unit(tau_ground, "tau_ground");
    if (port < 0 || port > 65535) throw Error(Errc::InvalidConfig, "port out of range");
    if (k_default < 1) throw Error(Errc::InvalidConfig, "k_default must be at least 1");
    if (maintenance_horizon_days < 1) throw Error(Errc::InvalidConfig, "maintenance_horizon_days must be at least 1");
    if (token_ttl.count() < 1 || session_idle.count() < 1) throw Error(Errc::InvalidConfig, "ttl values must be positive");
    if (data_dir.empty()) throw Error(Errc::InvalidConfig, "data_dir is required");
    if (generation == rag::GenerationKind::remote_llm && llm.endpoint.empty())
        throw Error(Errc::InvalidConfig, "generation.provider = remote_llm needs llm.endpoint");
    if (embedder.provider == embedding::Provider::remote && remote_embedder.endpoint.empty())
        throw Error(Errc::InvalidConfig, "embedder.provider = remote needs embedder.endpoint");
    try {
        embedder.validate();
        index.hnsw.validate();
        chunking.validate();
    } catch (const Error& e) {
        throw Error(Errc::InvalidConfig, e.what());
    }
}

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw Error(Errc::InvalidConfig, std::string(key) + ": not a number: " + std::string(v));
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    auto l = to_lower_ascii(v);
    if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
    if (l == "false" || l == "no" || l == "off" || l == "0") return false;
    throw Error(Errc::InvalidConfig, std::string(key) + ": not a boolean: " + std::string(v));
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view v) {
    if (v.empty()) return {};
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace

ServerConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ServerConfig c;
    using Setter = std::function<void(std::string_view key, std::string_view value)>;
    auto path_of = [&](std::filesystem::path ServerConfig::*field) {
        return [&c, &base_dir, field](std::string_view, std::string_view v) { c.*field = resolve(base_dir, v); };
    };
    std::map<std::string, Setter, std::less<>> setters{
        {"listen_address", [&](auto, auto v) { c.listen_address = std::string(v); }},
        {"port", [&](auto k, auto v) { c.port = parse_number<int>(k, v); }},
        {"data_dir", path_of(&ServerConfig::data_dir)},
        {"embedder.provider",
         [&](auto k, auto v) {
             auto p = embedding::parse_provider(v);
             if (!p) throw Error(Errc::InvalidConfig, std::string(k) + ": unknown provider " + std::string(v));
             c.embedder.provider = *p;
         }},
        {"embedder.dimension", [&](auto k, auto v) { c.embedder.dimension = parse_number<std::uint32_t>(k, v); }},
        {"embedder.ngram_min", [&](auto k, auto v) { c.embedder.ngram_min = parse_number<std::uint32_t>(k, v); }},
        {"embedder.ngram_max", [&](auto k, auto v) { c.embedder.ngram_max = parse_number<std::uint32_t>(k, v); }},
        {"embedder.seed", [&](auto k, auto v) { c.embedder.seed = parse_number<std::uint64_t>(k, v); }},
        {"embedder.endpoint", [&](auto, auto v) { c.remote_embedder.endpoint = std::string(v); }},
        {"embedder.credential", [&](auto, auto v) { c.remote_embedder.credential = std::string(v); }},
        {"embedder.timeout_ms",
         [&](auto k, auto v) { c.remote_embedder.timeout = std::chrono::milliseconds(parse_number<long>(k, v)); }},
        {"index.kind",
         [&](auto k, auto v) {
             auto kind = vecstore::parse_index_kind(v);
             if (!kind) throw Error(Errc::InvalidConfig, std::string(k) + ": unknown index kind " + std::string(v));
             c.index.kind = *kind;
         }},
        {"hnsw.M", [&](auto k, auto v) { c.index.hnsw.M = parse_number<std::uint32_t>(k, v); }},
        {"hnsw.ef_construction",
         [&](auto k, auto v) { c.index.hnsw.ef_construction = parse_number<std::uint32_t>(k, v); }},
        {"hnsw.ef_search", [&](auto k, auto v) { c.index.hnsw.ef_search = parse_number<std::uint32_t>(k, v); }},
        {"hnsw.level_seed", [&](auto k, auto v) { c.index.hnsw.level_seed = parse_number<std::uint64_t>(k, v); }},
        {"chunk.target_size", [&](auto k, auto v) { c.chunking.target_size = parse_number<std::size_t>(k, v); }},
        {"chunk.overlap", [&](auto k, auto v) { c.chunking.overlap = parse_number<std::size_t>(k, v); }},
        {"chunk.min_size", [&](auto k, auto v) { c.chunking.min_size = parse_number<std::size_t>(k, v); }},
        {"tau_intent", [&](auto k, auto v) { c.tau_intent = parse_number<double>(k, v); }},
        {"tau_ground", [&](auto k, auto v) { c.tau_ground = parse_number<double>(k, v); }},
        {"k_default", [&](auto k, auto v) { c.k_default = parse_number<std::size_t>(k, v); }},
        {"answer_budget", [&](auto k, auto v) { c.answer_budget = parse_number<std::size_t>(k, v); }},
        {"code_pattern", [&](auto, auto v) { c.code_pattern = std::string(v); }},
        {"generation.provider",
         [&](auto k, auto v) {
             auto g = rag::parse_generation_kind(v);
             if (!g) throw Error(Errc::InvalidConfig, std::string(k) + ": unknown provider " + std::string(v));
             c.generation = *g;
         }},
        {"generation.prompt_template", path_of(&ServerConfig::prompt_template)},
        {"llm.endpoint", [&](auto, auto v) { c.llm.endpoint = std::string(v); }},
        {"llm.credential", [&](auto, auto v) { c.llm.credential = std::string(v); }},
        {"llm.timeout_ms", [&](auto k, auto v) { c.llm.timeout = std::chrono::milliseconds(parse_number<long>(k, v)); }},
        {"promotion.min_votes", [&](auto k, auto v) { c.promotion.min_votes = parse_number<std::size_t>(k, v); }},
        {"promotion.require_accepted", [&](auto k, auto v) { c.promotion.require_accepted = parse_bool(k, v); }},
        {"language_profiles", path_of(&ServerConfig::language_profiles)},
        {"default_language", [&](auto, auto v) { c.default_language = std::string(v); }},
        {"exemplars", path_of(&ServerConfig::exemplars)},
        {"selftest_dir", path_of(&ServerConfig::selftest_dir)},
        {"maintenance_dir", path_of(&ServerConfig::maintenance_dir)},
        {"refusal_templates", path_of(&ServerConfig::refusal_templates)},
        {"maintenance_horizon_days", [&](auto k, auto v) { c.maintenance_horizon_days = parse_number<int>(k, v); }},
        {"kiosk_mode", [&](auto k, auto v) { c.kiosk_mode = parse_bool(k, v); }},
        {"admin_token", [&](auto, auto v) { c.admin_token = std::string(v); }},
        {"token_ttl_s", [&](auto k, auto v) { c.token_ttl = std::chrono::seconds(parse_number<long>(k, v)); }},
        {"session_idle_s", [&](auto k, auto v) { c.session_idle = std::chrono::seconds(parse_number<long>(k, v)); }},
        {"anonymized_logging", [&](auto k, auto v) { c.anonymized_logging = parse_bool(k, v); }},
        {"log_salt", [&](auto, auto v) { c.log_salt = std::string(v); }},
    };

    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
        auto key = trim(t.substr(0, eq));
        auto value = trim(t.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) throw Error(Errc::InvalidConfig, "unknown config key " + std::string(key));
        it->second(key, value);
    }
    c.validate();
    return c;
}

ServerConfig load_config(const std::filesystem::path& path) {
    auto abs = std::filesystem::absolute(path);
    return parse_config(read_file(abs), abs.parent_path());
}

std::string format_config(const ServerConfig& c) {
    std::ostringstream o;
    o.precision(17);
    auto b = [](bool v) { return v ? "true" : "false"; };
    o << "listen_address = " << c.listen_address << "\n"
      << "port = " << c.port << "\n"
      << "data_dir = " << c.data_dir.string() << "\n"
      << "embedder.provider = " << embedding::provider_name(c.embedder.provider) << "\n"
      << "embedder.dimension = " << c.embedder.dimension << "\n"
      << "embedder.ngram_min = " << c.embedder.ngram_min << "\n"
      << "embedder.ngram_max = " << c.embedder.ngram_max << "\n"
      << "embedder.seed = " << c.embedder.seed << "\n"
      << "embedder.endpoint = " << c.remote_embedder.endpoint << "\n"
      << "embedder.credential = " << c.remote_embedder.credential << "\n"
      << "embedder.timeout_ms = " << c.remote_embedder.timeout.count() << "\n"
      << "index.kind = " << vecstore::index_kind_name(c.index.kind) << "\n"
      << "hnsw.M = " << c.index.hnsw.M << "\n"
      << "hnsw.ef_construction = " << c.index.hnsw.ef_construction << "\n"
      << "hnsw.ef_search = " << c.index.hnsw.ef_search << "\n"
      << "hnsw.level_seed = " << c.index.hnsw.level_seed << "\n"
      << "chunk.target_size = " << c.chunking.target_size << "\n"
      << "chunk.overlap = " << c.chunking.overlap << "\n"
      << "chunk.min_size = " << c.chunking.min_size << "\n"
      << "tau_intent = " << c.tau_intent << "\n"
      << "tau_ground = " << c.tau_ground << "\n"
      << "k_default = " << c.k_default << "\n"
      << "answer_budget = " << c.answer_budget << "\n"
      << "code_pattern = " << c.code_pattern << "\n"
      << "generation.provider = " << rag::generation_kind_name(c.generation) << "\n"
      << "generation.prompt_template = " << c.prompt_template.string() << "\n"
      << "llm.endpoint = " << c.llm.endpoint << "\n"
      << "llm.credential = " << c.llm.credential << "\n"
      << "llm.timeout_ms = " << c.llm.timeout.count() << "\n"
      << "promotion.min_votes = " << c.promotion.min_votes << "\n"
      << "promotion.require_accepted = " << b(c.promotion.require_accepted) << "\n"
      << "language_profiles = " << c.language_profiles.string() << "\n"
      << "default_language = " << c.default_language << "\n"
      << "exemplars = " << c.exemplars.string() << "\n"
      << "selftest_dir = " << c.selftest_dir.string() << "\n"
      << "maintenance_dir = " << c.maintenance_dir.string() << "\n"
      << "refusal_templates = " << c.refusal_templates.string() << "\n"
      << "maintenance_horizon_days = " << c.maintenance_horizon_days << "\n"
      << "kiosk_mode = " << b(c.kiosk_mode) << "\n"
      << "admin_token = " << c.admin_token << "\n"
      << "token_ttl_s = " << c.token_ttl.count() << "\n"
      << "session_idle_s = " << c.session_idle.count() << "\n"
      << "anonymized_logging = " << b(c.anonymized_logging) << "\n"
      << "log_salt = " << c.log_salt << "\n";
    return o.str();
}

void ensure_writable_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
    auto probe = dir / ".write-probe";
    try {
        write_file_atomic(probe, "ok");
    } catch (const Error&) {
        throw Error(Errc::IoError, dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

}  // namespace bmet::server
