#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/eval/harness.hpp"
#include "bmet/rag/language.hpp"
#include "bmet/server/desk.hpp"
#include "bmet/server/http.hpp"

namespace {

using namespace bmet;

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

server::ServerConfig config_or_default(const std::string& path) {
    return path.empty() ? server::ServerConfig{} : server::load_config(path);
}

void print_ingest(const rag::IngestReport& r, const std::filesystem::path& dir) {
    std::cout << "documents " << r.documents << "  chunks " << r.chunks << "  catalog entries " << r.catalog_entries
              << "  malformed rows " << r.malformed_rows << "  failed files " << r.failed() << "\n";
    for (const auto& [seg, n] : r.segment_counts) std::cout << "  " << seg << "  " << n << "\n";
    for (const auto& f : r.files)
        if (f.error) std::cout << "  skipped " << f.path << ": " << *f.error << "\n";
    std::cout << "persisted to " << dir.string() << "\n";
}

std::string sole_model(const rag::KnowledgeBase& kb, const std::string& requested) {
    if (!requested.empty()) return requested;
    auto models = kb.device_models();
    if (models.size() != 1) throw Error(Errc::InvalidArgument, "several device models; pass --device-model");
    return models.front();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bmet: offline help desk for biomedical equipment technicians"};
    app.require_subcommand(1);

    std::string manifest, config_path, data_dir;
    auto* ingest = app.add_subcommand("ingest", "build and persist the knowledge base from a manifest");
    ingest->add_option("--manifest", manifest, "manifest file")->required();
    ingest->add_option("--config", config_path, "server config");
    ingest->add_option("--data-dir", data_dir, "overrides the config data_dir");

    int port_override = -1;
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--config", config_path, "server config")->required();
    serve->add_option("--port", port_override, "overrides the config port (0 picks a free one)");
    serve->add_option("--data-dir", data_dir, "overrides the config data_dir");

    std::string suite_s, out_path, cases_path, device_model;
    std::uint64_t seed = 7;
    eval::AnnRecallParams ann;
    std::vector<std::size_t> ef_sweep;
    auto* ev = app.add_subcommand("eval", "run an evaluation suite");
    ev->add_option("--suite", suite_s, "error_code|instructional|ann_recall|latency")->required();
    ev->add_option("--seed", seed, "seed recorded in the report; drives ann_recall data");
    ev->add_option("--out", out_path, "report path (a .timing.jsonl sibling is written too)");
    ev->add_option("--config", config_path, "server config (not needed for ann_recall)");
    ev->add_option("--manifest", manifest, "ingest this manifest into data_dir first");
    ev->add_option("--data-dir", data_dir, "overrides the config data_dir");
    ev->add_option("--cases", cases_path, "instructional cases (default: eval/instructional.txt beside the config)");
    ev->add_option("--device-model", device_model, "device model to query");
    ev->add_option("--n", ann.n_vectors, "ann_recall: vectors");
    ev->add_option("--dims", ann.dims, "ann_recall: dimension");
    ev->add_option("--k", ann.k, "ann_recall: k");
    ev->add_option("--queries", ann.n_queries, "ann_recall: queries");
    ev->add_option("--ef", ann.hnsw.ef_search, "ann_recall: ef_search");
    ev->add_option("--ef-sweep", ef_sweep, "ann_recall: extra ef_search values")->delimiter(',');

    std::string sample, tag, name, profile_out;
    auto* lp = app.add_subcommand("lang-profile", "build a language profile from a sample text");
    lp->add_option("--sample", sample, "sample text file")->required();
    lp->add_option("--tag", tag, "language tag")->required();
    lp->add_option("--name", name, "language name")->required();
    lp->add_option("--out", profile_out, "output .profile file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            auto cfg = config_or_default(config_path);
            if (!data_dir.empty()) cfg.data_dir = data_dir;
            auto report = server::ingest_corpus(manifest, cfg);
            print_ingest(report, cfg.data_dir);
            return 0;
        }

        if (*serve) {
            auto cfg = server::load_config(config_path);
            if (!data_dir.empty()) cfg.data_dir = data_dir;
            if (port_override >= 0) cfg.port = port_override;
            server::Desk desk(cfg);
            if (desk.degraded()) std::cerr << "degraded mode (tools only): " << desk.degraded_reason() << "\n";
            server::HttpService svc(desk);
            int port = svc.bind(cfg.listen_address, cfg.port);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::atomic<bool> done{false};
            std::thread watcher([&] {
                while (!done) {
                    if (g_stop) {
                        svc.stop();
                        return;
                    }
                    std::this_thread::sleep_for(std::chrono::milliseconds(50));
                }
            });
            std::cout << "listening on " << cfg.listen_address << ":" << port << std::endl;
            svc.run();
            done = true;
            watcher.join();
            return 0;
        }

        if (*ev) {
            auto suite = eval::parse_suite(suite_s);
            if (!suite) throw Error(Errc::InvalidArgument, "unknown suite " + suite_s);
            eval::EvalReport report;
            if (*suite == eval::Suite::ann_recall) {
                ann.seed = seed;
                ann.ef_sweep = ef_sweep;
                report = eval::run_ann_recall_eval(ann);
            } else {
                if (config_path.empty()) throw Error(Errc::InvalidArgument, "--config is required for this suite");
                auto cfg = server::load_config(config_path);
                if (!data_dir.empty()) cfg.data_dir = data_dir;
                if (!manifest.empty()) print_ingest(server::ingest_corpus(manifest, cfg), cfg.data_dir);
                server::Desk desk(cfg);
                auto& engine = desk.engine();
                const auto& kb = engine.knowledge_base();
                auto cases_file = cases_path.empty()
                                      ? std::filesystem::absolute(config_path).parent_path() / "eval" / "instructional.txt"
                                      : std::filesystem::path(cases_path);
                if (*suite == eval::Suite::error_code) {
                    auto model = sole_model(kb, device_model);
                    auto catalog = kb.catalog(model);
                    if (!catalog) throw Error(Errc::NoCatalogLoaded, model);
                    report = eval::run_error_code_eval(engine, model, *catalog, seed);
                } else if (*suite == eval::Suite::instructional) {
                    std::optional<std::string> m;
                    if (!device_model.empty()) m = device_model;
                    report = eval::run_instructional_eval(engine, eval::load_instructional_cases(cases_file), m, seed);
                } else {
                    auto model = sole_model(kb, device_model);
                    auto cases = std::filesystem::exists(cases_file) ? eval::load_instructional_cases(cases_file)
                                                                     : std::vector<eval::EvalCase>{};
                    auto catalog = kb.catalog(model);
                    report = eval::run_latency_eval(desk, eval::latency_queries(cases, catalog.get()), model, seed);
                }
            }
            std::cout << eval::summary_table(report);
            if (!out_path.empty()) eval::write_report(report, out_path, now_utc());
            return 0;
        }

        if (*lp) {
            auto profile = rag::build_language_profile(read_file(sample), tag, name);
            write_file_atomic(profile_out, rag::format_language_profile(profile));
            std::cout << "wrote " << profile_out << " (" << profile.counts.size() << " trigrams)\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Errc::PortInUse ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
