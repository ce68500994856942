#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "bmet/common/text.hpp"
#include "bmet/server/config.hpp"
#include "bmet/server/desk.hpp"

namespace bmet::testing {

inline std::filesystem::path data_dir() { return BMET_DATA_DIR; }

// Fresh directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() / ("bmet-test-" + random_hex(8));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

// The shipped desk config pointed at `dir`.
inline server::ServerConfig desk_config(const std::filesystem::path& dir) {
    auto cfg = server::load_config(data_dir() / "desk" / "server.conf");
    cfg.data_dir = dir;
    return cfg;
}

// Desk corpus ingested once per test binary; shared, read-mostly.
struct DeskFixture {
    TempDir dir;
    server::ServerConfig config;
    rag::IngestReport report;
    std::unique_ptr<server::Desk> desk;

    DeskFixture() : config(desk_config(dir.path())) {
        report = server::ingest_corpus(data_dir() / "desk" / "manifest.txt", config);
        desk = std::make_unique<server::Desk>(config);
    }
};

inline DeskFixture& desk_fixture() {
    static DeskFixture f;
    return f;
}

}  // namespace bmet::testing
