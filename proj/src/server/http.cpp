#include "bmet/server/http.hpp"

#include <httplib.h>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/rag/json_codec.hpp"
#include "bmet/tools/error_lookup.hpp"
#include "bmet/tools/log_analysis.hpp"
#include "bmet/tools/maintenance.hpp"

namespace bmet::server {

using Json = nlohmann::json;

int http_status_for(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidToken:
        case Errc::Expired:
            return 401;
        case Errc::NotAuthorized:
            return 403;
        case Errc::UnknownPost:
        case Errc::UnknownReply:
        case Errc::UnknownSession:
        case Errc::UnknownTarget:
        case Errc::NoScriptForModel:
        case Errc::EmptyProfile:
            return 404;
        case Errc::DuplicateVote:
        case Errc::AlreadyPromoted:
        case Errc::RuleNotMet:
        case Errc::SessionComplete:
        case Errc::DuplicateId:
        case Errc::DuplicateCode:
            return 409;
        case Errc::StoreUnavailable:
        case Errc::MissingStores:
        case Errc::NoCatalogLoaded:
        case Errc::ProviderUnavailable:
            return 503;
        case Errc::ProviderTimeout:
            return 504;
        case Errc::IoError:
        case Errc::CorruptFile:
        case Errc::FormatVersionMismatch:
        case Errc::EmbedderSpecMismatch:
        case Errc::MixedEmbedderSpec:
        case Errc::DimensionMismatch:
            return 500;
        default:
            return 400;
    }
}

namespace {

void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
    send_json(res, {{"error", {{"code", errc_name(code)}, {"message", message}}}}, http_status_for(code));
}

Json body_json(const httplib::Request& req) {
    if (trim(req.body).empty()) return Json::object();
    try {
        auto j = Json::parse(req.body);
        if (!j.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw Error(Errc::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
}

template <typename T>
std::optional<T> field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        throw Error(Errc::InvalidArgument, std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T required(const Json& j, const char* key) {
    auto v = field<T>(j, key);
    if (!v) throw Error(Errc::InvalidArgument, std::string("field '") + key + "' is required");
    return *v;
}

std::string bearer(const httplib::Request& req) {
    auto h = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (!starts_with_ci(h, prefix)) return {};
    return std::string(trim(std::string_view(h).substr(prefix.size())));
}

Json reply_json(const forum::Reply& r, const forum::Forum& f) {
    return {{"reply_id", r.reply_id},   {"post_id", r.post_id},
            {"author", r.author_id},    {"body", r.body},
            {"votes", r.votes},         {"accepted", r.accepted},
            {"created_at", format_iso8601(r.created_at)},
            {"promoted", f.is_promoted(r.reply_id)},
            {"promoted_chunks", f.promoted_chunks(r.reply_id)}};
}

Json post_json(const forum::ForumPost& p) {
    return {{"post_id", p.post_id},
            {"author", p.author_id},
            {"device_model", p.device_model},
            {"title", p.title},
            {"body", p.body},
            {"tags", p.tags},
            {"created_at", format_iso8601(p.created_at)},
            {"status", forum::post_status_name(p.status)}};
}

Json advance_json(const std::variant<tools::SelfTestStep, tools::SelfTestReport>& v, std::string_view session_id) {
    Json j{{"session_id", session_id}};
    if (const auto* step = std::get_if<tools::SelfTestStep>(&v)) {
        j["state"] = "in_progress";
        j["next_step"] = rag::to_json(*step);
    } else {
        j["state"] = "complete";
        j["report"] = rag::to_json(std::get<tools::SelfTestReport>(v));
    }
    return j;
}

}  // namespace

struct HttpService::Impl {
    Desk& desk;
    httplib::Server server;
    bool bound = false;

    explicit Impl(Desk& d) : desk(d) { routes(); }

    Identity authenticate(const httplib::Request& req) { return desk.tokens().authenticate(bearer(req)); }

    Identity require_admin(const httplib::Request& req) {
        auto id = authenticate(req);
        if (!id.admin()) throw Error(Errc::NotAuthorized, "admin role required");
        return id;
    }

    // Kiosk mode lets reads through without a token.
    std::optional<Identity> reader(const httplib::Request& req) {
        auto token = bearer(req);
        if (token.empty()) {
            if (desk.config().kiosk_mode) return std::nullopt;
            throw Error(Errc::InvalidToken, "missing bearer token");
        }
        return desk.tokens().authenticate(token);
    }

    template <typename Fn>
    httplib::Server::Handler wrap(Fn fn) {
        return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const std::exception& e) {
                send_error(res, Errc::IoError, e.what());
            }
        };
    }

    void routes() {
        server.set_payload_max_length(16u << 20);
        // httplib adds SO_REUSEPORT by default, which lets a second server share a busy port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        server.set_tcp_nodelay(true);

        server.Get("/v1/health", wrap([this](const auto&, auto& res) {
                       send_json(res, desk.health());
                   }));
        server.Get("/health", wrap([this](const auto&, auto& res) {
                       send_json(res, desk.health());
                   }));

        server.Post("/v1/auth/tokens", wrap([this](const auto& req, auto& res) {
                        require_admin(req);
                        auto body = body_json(req);
                        auto role_s = field<std::string>(body, "role").value_or("technician");
                        auto role = parse_role(role_s);
                        if (!role) throw Error(Errc::InvalidArgument, "unknown role " + role_s);
                        auto t = desk.tokens().issue(required<std::string>(body, "technician_id"), *role);
                        send_json(res,
                                  {{"token", t.token},
                                   {"role", role_name(*role)},
                                   {"expires_at", format_iso8601(t.expires_at)}},
                                  201);
                    }));

        server.Post("/v1/sessions", wrap([this](const auto& req, auto& res) {
                        auto who = reader(req);
                        auto body = body_json(req);
                        auto s = desk.sessions().create(who ? desk.actor_id(who->technician_id) : "anonymous",
                                                        field<std::string>(body, "device_model"));
                        send_json(res,
                                  {{"session_id", s.session_id},
                                   {"device_model", s.device_model ? Json(*s.device_model) : Json(nullptr)}},
                                  201);
                    }));

        server.Post("/v1/query", wrap([this](const auto& req, auto& res) {
                        auto who = reader(req);
                        auto body = body_json(req);
                        rag::QueryRequest q;
                        q.text = field<std::string>(body, "text").value_or("");
                        q.language = field<std::string>(body, "language");
                        q.device_model = field<std::string>(body, "device_model");
                        q.session_id = field<std::string>(body, "session_id");
                        if (auto k = field<long long>(body, "k")) {
                            if (*k < 1) throw Error(Errc::InvalidArgument, "k must be at least 1");
                            q.k = static_cast<std::size_t>(*k);
                        }
                        q.requested_segments = field<std::vector<std::string>>(body, "segments");
                        auto out = desk.query(std::move(q), who);
                        auto j = rag::to_json(out.answer);
                        if (out.session_id) j["session_id"] = *out.session_id;
                        send_json(res, j);
                    }));

        server.Get("/v1/error-codes/:code", wrap([this](const auto& req, auto& res) {
                       reader(req);
                       auto* kb = desk.knowledge_base();
                       if (!kb) throw Error(Errc::NoCatalogLoaded, "no knowledge base loaded");
                       auto model = req.has_param("device_model") ? req.get_param_value("device_model") : "";
                       if (model.empty()) {
                           auto models = kb->device_models();
                           if (models.size() != 1)
                               throw Error(Errc::InvalidArgument, "device_model is required");
                           model = models.front();
                       }
                       auto catalog = kb->catalog(model);
                       auto cls = kb->device_class_of(model);
                       const auto* seg = cls ? kb->segment(*cls, corpus::DocClass::error_catalog) : nullptr;
                       auto ans = tools::lookup_error_code(req.path_params.at("code"), catalog.get(), seg,
                                                           &desk.embedder());
                       auto j = rag::to_json(ans);
                       j["device_model"] = model;
                       send_json(res, j);
                   }));

        server.Post("/v1/logs/analyze", wrap([this](const auto& req, auto& res) {
                        reader(req);
                        std::string text, format = std::string(tools::ReferenceLogFormat::kName), model;
                        if (req.is_multipart_form_data()) {
                            if (req.has_file("file")) text = req.get_file_value("file").content;
                            else if (req.has_file("log")) text = req.get_file_value("log").content;
                            else throw Error(Errc::InvalidArgument, "multipart field 'file' is required");
                            if (req.has_file("format")) format = req.get_file_value("format").content;
                            if (req.has_file("device_model")) model = req.get_file_value("device_model").content;
                        } else {
                            text = req.body;
                            if (req.has_param("format")) format = req.get_param_value("format");
                        }
                        if (req.has_param("device_model")) model = req.get_param_value("device_model");
                        auto parsed = tools::parse_log(text, trim(format));
                        std::shared_ptr<const tools::ErrorCatalog> catalog;
                        if (!model.empty() && desk.knowledge_base()) catalog = desk.knowledge_base()->catalog(model);
                        auto j = rag::to_json(tools::analyze_log(parsed, catalog.get()));
                        j["format"] = trim(format);
                        send_json(res, j);
                    }));

        server.Post("/v1/selftest/:model/start", wrap([this](const auto& req, auto& res) {
                        reader(req);
                        auto s = desk.selftests().start(req.path_params.at("model"));
                        send_json(res, rag::to_json(s), 201);
                    }));

        server.Post("/v1/selftest/:session/advance", wrap([this](const auto& req, auto& res) {
                        reader(req);
                        auto body = body_json(req);
                        auto r_s = required<std::string>(body, "result");
                        auto r = tools::parse_step_result(r_s);
                        if (!r) throw Error(Errc::InvalidArgument, "result must be pass, fail or skipped");
                        const auto& id = req.path_params.at("session");
                        send_json(res, advance_json(desk.selftests().advance(id, *r), id));
                    }));

        server.Get("/v1/selftest/:session", wrap([this](const auto& req, auto& res) {
                       reader(req);
                       send_json(res, rag::to_json(desk.selftests().get(req.path_params.at("session"))));
                   }));

        auto plan_of = [this](const httplib::Request& req) {
            reader(req);
            auto profile = desk.maintenance().find(req.path_params.at("model"));
            int horizon = desk.config().maintenance_horizon_days;
            if (req.has_param("horizon_days")) {
                try {
                    horizon = std::stoi(req.get_param_value("horizon_days"));
                } catch (const std::exception&) {
                    throw Error(Errc::InvalidHorizon, "horizon_days is not an integer");
                }
            }
            Date start = to_date(desk.clock()());
            if (req.has_param("start")) {
                auto d = parse_date(req.get_param_value("start"));
                if (!d) throw Error(Errc::InvalidArgument, "start must be YYYY-MM-DD");
                start = *d;
            }
            return tools::generate_maintenance_plan(*profile, horizon, start);
        };

        server.Get("/v1/maintenance/:model/plan", wrap([plan_of](const auto& req, auto& res) {
                       send_json(res, rag::to_json(plan_of(req)));
                   }));

        server.Get("/v1/maintenance/:model/plan.ics", wrap([plan_of](const auto& req, auto& res) {
                       auto plan = plan_of(req);
                       res.set_content(tools::export_icalendar(plan), "text/calendar; charset=utf-8");
                       res.set_header("Content-Disposition",
                                      "attachment; filename=\"" + slugify(plan.device_model) + "-maintenance.ics\"");
                   }));

        server.Get("/v1/forum/posts", wrap([this](const auto& req, auto& res) {
                       reader(req);
                       auto model = req.has_param("device_model") ? req.get_param_value("device_model") : "";
                       Json out = Json::array();
                       for (const auto& p : desk.forum().posts())
                           if (model.empty() || p.device_model == model) out.push_back(post_json(p));
                       send_json(res, {{"posts", out}});
                   }));

        server.Get("/v1/forum/posts/:post", wrap([this](const auto& req, auto& res) {
                       reader(req);
                       const auto& id = req.path_params.at("post");
                       auto p = desk.forum().post(id);
                       if (!p) throw Error(Errc::UnknownPost, id);
                       auto j = post_json(*p);
                       Json replies = Json::array();
                       for (const auto& r : desk.forum().replies(id)) replies.push_back(reply_json(r, desk.forum()));
                       j["replies"] = replies;
                       send_json(res, j);
                   }));

        server.Post("/v1/forum/posts", wrap([this](const auto& req, auto& res) {
                        auto who = authenticate(req);
                        auto body = body_json(req);
                        auto p = desk.forum().create_post(desk.actor_id(who.technician_id),
                                                          required<std::string>(body, "device_model"),
                                                          field<std::string>(body, "title").value_or(""),
                                                          field<std::string>(body, "body").value_or(""),
                                                          field<std::vector<std::string>>(body, "tags").value_or(
                                                              std::vector<std::string>{}));
                        send_json(res, post_json(p), 201);
                    }));

        server.Post("/v1/forum/posts/:post/replies", wrap([this](const auto& req, auto& res) {
                        auto who = authenticate(req);
                        auto body = body_json(req);
                        auto r = desk.forum().create_reply(req.path_params.at("post"),
                                                           desk.actor_id(who.technician_id),
                                                           field<std::string>(body, "body").value_or(""));
                        send_json(res, reply_json(r, desk.forum()), 201);
                    }));

        server.Post("/v1/forum/replies/:reply/upvote", wrap([this](const auto& req, auto& res) {
                        auto who = authenticate(req);
                        const auto& id = req.path_params.at("reply");
                        desk.forum().upvote(id, desk.actor_id(who.technician_id));
                        desk.maybe_promote(id);
                        send_json(res, reply_json(*desk.forum().reply(id), desk.forum()));
                    }));

        server.Post("/v1/forum/posts/:post/accept/:reply", wrap([this](const auto& req, auto& res) {
                        auto who = authenticate(req);
                        const auto& reply_id = req.path_params.at("reply");
                        auto p = desk.forum().accept_reply(req.path_params.at("post"), reply_id,
                                                           desk.actor_id(who.technician_id), who.admin());
                        desk.maybe_promote(reply_id);
                        auto j = post_json(p);
                        j["accepted_reply"] = reply_json(*desk.forum().reply(reply_id), desk.forum());
                        send_json(res, j);
                    }));

        server.Post("/v1/forum/replies/:reply/promote", wrap([this](const auto& req, auto& res) {
                        require_admin(req);
                        auto* kb = desk.knowledge_base();
                        if (!kb) throw Error(Errc::StoreUnavailable, "no knowledge base loaded");
                        auto r = forum::promote_to_knowledge(desk.forum(), req.path_params.at("reply"),
                                                             desk.config().promotion, *kb, desk.embedder(),
                                                             desk.config().chunking, desk.config().data_dir);
                        send_json(res, {{"reply_id", r.reply_id}, {"doc_id", r.doc_id}, {"chunk_ids", r.chunk_ids}},
                                  201);
                    }));

        server.Post("/v1/feedback", wrap([this](const auto& req, auto& res) {
                        auto who = authenticate(req);
                        auto body = body_json(req);
                        auto v_s = required<std::string>(body, "verdict");
                        auto v = forum::parse_verdict(v_s);
                        if (!v) throw Error(Errc::InvalidArgument, "verdict must be correct or incorrect");
                        auto label = desk.feedback().record(required<std::string>(body, "target"), *v,
                                                            desk.actor_id(who.technician_id),
                                                            field<std::string>(body, "comment").value_or(""));
                        send_json(res,
                                  {{"label_id", label.label_id},
                                   {"target", label.target},
                                   {"verdict", forum::verdict_name(label.verdict)},
                                   {"created_at", format_iso8601(label.created_at)}},
                                  201);
                    }));

        server.Get("/v1/feedback/:target", wrap([this](const auto& req, auto& res) {
                       reader(req);
                       const auto& t = req.path_params.at("target");
                       auto a = desk.feedback().aggregate(t);
                       send_json(res, {{"target", t}, {"correct", a.correct}, {"incorrect", a.incorrect}});
                   }));

        server.Post("/v1/admin/exemplars/reload", wrap([this](const auto& req, auto& res) {
                        require_admin(req);
                        desk.reload_exemplars();
                        send_json(res, {{"reloaded", desk.config().exemplars.string()}});
                    }));

        server.Get("/v1/admin/interactions", wrap([this](const auto& req, auto& res) {
                       require_admin(req);
                       res.set_content(desk.interactions().export_all(), "application/x-ndjson");
                   }));

        server.Get("/v1/admin/feedback/export", wrap([this](const auto& req, auto& res) {
                       require_admin(req);
                       res.set_content(desk.feedback().export_records(desk.config().log_salt),
                                       "application/x-ndjson");
                   }));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty() && res.status == 404) {
                send_json(res, {{"error", {{"code", "NotFound"}, {"message", "no such endpoint"}}}}, 404);
            }
        });
    }
};

HttpService::HttpService(Desk& desk) : impl_(std::make_unique<Impl>(desk)) {}
HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(Errc::PortInUse, "cannot bind " + host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        throw Error(Errc::PortInUse, host + ":" + std::to_string(port) + " is unavailable");
    }
    impl_->bound = true;
    return bound;
}

void HttpService::run() {
    if (!impl_->bound) throw Error(Errc::InvalidArgument, "bind before run");
    impl_->server.listen_after_bind();
}

void HttpService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpService::running() const { return impl_->server.is_running(); }

}  // namespace bmet::server
