#include "bmet/forum/forum.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::forum {

using Json = nlohmann::json;

std::string_view post_status_name(PostStatus s) noexcept { return s == PostStatus::resolved ? "resolved" : "open"; }

std::string hash_identity(std::string_view salt, std::string_view id) {
    std::string buf(salt);
    buf += '\x1f';
    buf += id;
    return sha256_hex(buf);
}

namespace {

std::string numbered(std::string_view prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", n);
    return std::string(prefix) + buf;
}

std::size_t number_of(std::string_view id) {
    auto dash = id.rfind('-');
    if (dash == std::string_view::npos) return 0;
    std::size_t n = 0;
    for (char c : id.substr(dash + 1)) {
        if (c < '0' || c > '9') return 0;
        n = n * 10 + static_cast<std::size_t>(c - '0');
    }
    return n;
}

std::int64_t ms_of(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp ts_of(std::int64_t ms) { return Timestamp{std::chrono::milliseconds{ms}}; }

// Replays a log file line by line. Only the final line may be torn by a crash;
// a bad line elsewhere means the file is damaged.
template <typename Fn>
void replay(const std::filesystem::path& path, Fn&& apply) {
    if (!std::filesystem::exists(path)) return;
    auto text = read_file(path);
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        try {
            apply(lines[i]);
        } catch (const Json::exception&) {
            if (i + 1 == lines.size()) break;
            throw Error(Errc::CorruptFile, path.string() + ": bad record at line " + std::to_string(i + 1));
        }
    }
}

void open_append(std::ofstream& out, const std::filesystem::path& path) {
    out.open(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::IoError, "cannot open " + path.string());
}

}  // namespace

Forum::Forum(Clock clock) : clock_(std::move(clock)) {}
Forum::~Forum() = default;

void Forum::append(const std::string& line) {
    std::lock_guard lock(log_mu_);
    if (!log_.is_open()) return;
    log_ << line << '\n';
    log_.flush();
}

void Forum::apply_line(std::string_view line) {
    auto j = Json::parse(line);
    const auto ev = j.at("ev").get<std::string>();
    if (ev == "post") {
        ForumPost p;
        p.post_id = j.at("post_id").get<std::string>();
        p.author_id = j.at("author_id").get<std::string>();
        p.device_model = j.at("device_model").get<std::string>();
        p.title = j.at("title").get<std::string>();
        p.body = j.at("body").get<std::string>();
        p.tags = j.at("tags").get<std::vector<std::string>>();
        p.created_at = ts_of(j.at("created_at").get<std::int64_t>());
        next_post_ = std::max(next_post_, number_of(p.post_id) + 1);
        auto id = p.post_id;
        posts_[id] = std::move(p);
        reply_order_[id];
    } else if (ev == "reply") {
        ReplyState r;
        r.reply.reply_id = j.at("reply_id").get<std::string>();
        r.reply.post_id = j.at("post_id").get<std::string>();
        r.reply.author_id = j.at("author_id").get<std::string>();
        r.reply.body = j.at("body").get<std::string>();
        r.reply.created_at = ts_of(j.at("created_at").get<std::int64_t>());
        next_reply_ = std::max(next_reply_, number_of(r.reply.reply_id) + 1);
        reply_order_[r.reply.post_id].push_back(r.reply.reply_id);
        auto id = r.reply.reply_id;
        replies_[id] = std::move(r);
    } else if (ev == "vote") {
        auto& r = replies_.at(j.at("reply_id").get<std::string>());
        if (r.voters.insert(j.at("voter").get<std::string>()).second) ++r.reply.votes;
    } else if (ev == "accept") {
        auto& p = posts_.at(j.at("post_id").get<std::string>());
        auto rid = j.at("reply_id").get<std::string>();
        for (const auto& other : reply_order_[p.post_id]) replies_.at(other).reply.accepted = other == rid;
        p.status = PostStatus::resolved;
    } else if (ev == "promote") {
        promotions_[j.at("reply_id").get<std::string>()] = j.at("chunks").get<std::vector<std::string>>();
    } else {
        throw Error(Errc::CorruptFile, "unknown forum event " + ev);
    }
}

std::string Forum::snapshot_lines() const {
    std::string out;
    for (const auto& [id, p] : posts_) {
        out += Json{{"ev", "post"},          {"post_id", p.post_id}, {"author_id", p.author_id},
                    {"device_model", p.device_model}, {"title", p.title},     {"body", p.body},
                    {"tags", p.tags},        {"created_at", ms_of(p.created_at)}}
                   .dump() +
               "\n";
        std::string accepted;
        for (const auto& rid : reply_order_.at(id)) {
            const auto& r = replies_.at(rid);
            out += Json{{"ev", "reply"},          {"reply_id", rid},
                        {"post_id", id},          {"author_id", r.reply.author_id},
                        {"body", r.reply.body},   {"created_at", ms_of(r.reply.created_at)}}
                       .dump() +
                   "\n";
            for (const auto& v : r.voters) out += Json{{"ev", "vote"}, {"reply_id", rid}, {"voter", v}}.dump() + "\n";
            if (r.reply.accepted) accepted = rid;
        }
        if (!accepted.empty()) out += Json{{"ev", "accept"}, {"post_id", id}, {"reply_id", accepted}}.dump() + "\n";
    }
    for (const auto& [rid, chunks] : promotions_)
        out += Json{{"ev", "promote"}, {"reply_id", rid}, {"chunks", chunks}}.dump() + "\n";
    return out;
}

void Forum::attach_log(const std::filesystem::path& path) {
    std::unique_lock lock(mu_);
    replay(path, [&](std::string_view line) { apply_line(line); });
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_file_atomic(path, snapshot_lines());
    std::lock_guard log_lock(log_mu_);
    open_append(log_, path);
}

ForumPost& Forum::post_locked(std::string_view post_id) {
    auto it = posts_.find(post_id);
    if (it == posts_.end()) throw Error(Errc::UnknownPost, "unknown post " + std::string(post_id));
    return it->second;
}

Forum::ReplyState& Forum::reply_locked(std::string_view reply_id) {
    auto it = replies_.find(reply_id);
    if (it == replies_.end()) throw Error(Errc::UnknownReply, "unknown reply " + std::string(reply_id));
    return it->second;
}

ForumPost Forum::create_post(const std::string& author_id, const std::string& device_model, const std::string& title,
                             const std::string& body, std::vector<std::string> tags) {
    if (trim(title).empty() || trim(body).empty())
        throw Error(Errc::InvalidArgument, "post title and body must be non-empty");
    std::unique_lock lock(mu_);
    ForumPost p{numbered("post-", next_post_++), author_id, device_model, title, body, std::move(tags), clock_(),
                PostStatus::open};
    posts_[p.post_id] = p;
    reply_order_[p.post_id];
    append(Json{{"ev", "post"},          {"post_id", p.post_id}, {"author_id", p.author_id},
                {"device_model", p.device_model}, {"title", p.title},     {"body", p.body},
                {"tags", p.tags},        {"created_at", ms_of(p.created_at)}}
               .dump());
    return p;
}

Reply Forum::create_reply(const std::string& post_id, const std::string& author_id, const std::string& body) {
    if (trim(body).empty()) throw Error(Errc::InvalidArgument, "reply body must be non-empty");
    std::unique_lock lock(mu_);
    post_locked(post_id);
    ReplyState r;
    r.reply = Reply{numbered("reply-", next_reply_++), post_id, author_id, body, 0, false, clock_()};
    reply_order_[post_id].push_back(r.reply.reply_id);
    auto out = r.reply;
    replies_[out.reply_id] = std::move(r);
    append(Json{{"ev", "reply"},       {"reply_id", out.reply_id}, {"post_id", post_id},
                {"author_id", author_id}, {"body", body},             {"created_at", ms_of(out.created_at)}}
               .dump());
    return out;
}

Reply Forum::upvote(const std::string& reply_id, const std::string& voter_id) {
    std::unique_lock lock(mu_);
    auto& r = reply_locked(reply_id);
    if (!r.voters.insert(voter_id).second) throw Error(Errc::DuplicateVote, "already voted on " + reply_id);
    ++r.reply.votes;
    append(Json{{"ev", "vote"}, {"reply_id", reply_id}, {"voter", voter_id}}.dump());
    return r.reply;
}

ForumPost Forum::accept_reply(const std::string& post_id, const std::string& reply_id, const std::string& actor_id,
                              bool actor_is_admin) {
    std::unique_lock lock(mu_);
    auto& p = post_locked(post_id);
    auto& r = reply_locked(reply_id);
    if (r.reply.post_id != post_id) throw Error(Errc::UnknownReply, reply_id + " does not belong to " + post_id);
    if (!actor_is_admin && actor_id != p.author_id)
        throw Error(Errc::NotAuthorized, "only the post author or an admin may accept a reply");
    for (const auto& other : reply_order_[post_id]) replies_.at(other).reply.accepted = other == reply_id;
    p.status = PostStatus::resolved;
    append(Json{{"ev", "accept"}, {"post_id", post_id}, {"reply_id", reply_id}}.dump());
    return p;
}

std::optional<ForumPost> Forum::post(std::string_view post_id) const {
    std::shared_lock lock(mu_);
    auto it = posts_.find(post_id);
    if (it == posts_.end()) return std::nullopt;
    return it->second;
}

std::optional<Reply> Forum::reply(std::string_view reply_id) const {
    std::shared_lock lock(mu_);
    auto it = replies_.find(reply_id);
    if (it == replies_.end()) return std::nullopt;
    return it->second.reply;
}

std::vector<ForumPost> Forum::posts() const {
    std::shared_lock lock(mu_);
    std::vector<ForumPost> out;
    for (const auto& [_, p] : posts_) out.push_back(p);
    return out;
}

std::vector<Reply> Forum::replies(std::string_view post_id) const {
    std::shared_lock lock(mu_);
    std::vector<Reply> out;
    auto it = reply_order_.find(post_id);
    if (it == reply_order_.end()) return out;
    for (const auto& rid : it->second) out.push_back(replies_.at(rid).reply);
    return out;
}

PromotionTicket Forum::begin_promotion(const std::string& reply_id, const PromotionRule& rule) {
    std::unique_lock lock(mu_);
    auto& r = reply_locked(reply_id);
    if (promotions_.contains(reply_id) || pending_.contains(reply_id))
        throw Error(Errc::AlreadyPromoted, reply_id + " was already promoted");
    if ((rule.require_accepted && !r.reply.accepted) || r.reply.votes < rule.min_votes)
        throw Error(Errc::RuleNotMet, reply_id + " does not meet the promotion rule");
    pending_.insert(reply_id);
    return {posts_.at(r.reply.post_id), r.reply};
}

void Forum::complete_promotion(const std::string& reply_id, std::vector<std::string> chunk_ids) {
    std::unique_lock lock(mu_);
    pending_.erase(reply_id);
    append(Json{{"ev", "promote"}, {"reply_id", reply_id}, {"chunks", chunk_ids}}.dump());
    promotions_[reply_id] = std::move(chunk_ids);
}

void Forum::abort_promotion(const std::string& reply_id) {
    std::unique_lock lock(mu_);
    pending_.erase(reply_id);
}

bool Forum::is_promoted(std::string_view reply_id) const {
    std::shared_lock lock(mu_);
    return promotions_.find(reply_id) != promotions_.end();
}

std::vector<std::string> Forum::promoted_chunks(std::string_view reply_id) const {
    std::shared_lock lock(mu_);
    auto it = promotions_.find(reply_id);
    return it == promotions_.end() ? std::vector<std::string>{} : it->second;
}

std::string_view verdict_name(Verdict v) noexcept { return v == Verdict::correct ? "correct" : "incorrect"; }

std::optional<Verdict> parse_verdict(std::string_view s) noexcept {
    if (s == "correct") return Verdict::correct;
    if (s == "incorrect") return Verdict::incorrect;
    return std::nullopt;
}

FeedbackStore::FeedbackStore(TargetCheck target_exists, Clock clock)
    : target_exists_(std::move(target_exists)), clock_(std::move(clock)) {}
FeedbackStore::~FeedbackStore() = default;

FeedbackLabel FeedbackStore::upsert(std::string target, Verdict verdict, std::string author, std::string comment,
                                    Timestamp at, std::optional<std::string> label_id) {
    auto key = std::make_pair(target, author);
    auto it = labels_.find(key);
    if (it == labels_.end()) {
        FeedbackLabel l;
        if (label_id) {
            l.label_id = *label_id;
            next_label_ = std::max(next_label_, number_of(l.label_id) + 1);
        } else {
            l.label_id = numbered("label-", next_label_++);
        }
        l.target = std::move(target);
        l.author_id = std::move(author);
        it = labels_.emplace(key, std::move(l)).first;
    }
    it->second.verdict = verdict;
    it->second.comment = std::move(comment);
    it->second.created_at = at;
    return it->second;
}

void FeedbackStore::apply_line(std::string_view line) {
    auto j = Json::parse(line);
    auto v = parse_verdict(j.at("verdict").get<std::string>());
    if (!v) throw Error(Errc::CorruptFile, "bad feedback verdict");
    upsert(j.at("target").get<std::string>(), *v, j.at("author_id").get<std::string>(),
           j.value("comment", std::string{}), ts_of(j.at("created_at").get<std::int64_t>()),
           j.at("label_id").get<std::string>());
}

void FeedbackStore::attach_log(const std::filesystem::path& path) {
    std::unique_lock lock(mu_);
    replay(path, [&](std::string_view line) { apply_line(line); });
    std::vector<const FeedbackLabel*> rows;
    for (const auto& [_, l] : labels_) rows.push_back(&l);
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->label_id < b->label_id; });
    std::string out;
    for (const auto* l : rows) {
        out += Json{{"label_id", l->label_id},   {"target", l->target},   {"verdict", verdict_name(l->verdict)},
                    {"author_id", l->author_id}, {"comment", l->comment}, {"created_at", ms_of(l->created_at)}}
                   .dump() +
               "\n";
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_file_atomic(path, out);
    std::lock_guard log_lock(log_mu_);
    open_append(log_, path);
}

FeedbackLabel FeedbackStore::record(const std::string& target, Verdict verdict, const std::string& author_id,
                                    const std::string& comment) {
    if (!target_exists_ || !target_exists_(target)) throw Error(Errc::UnknownTarget, "unknown feedback target " + target);
    std::unique_lock lock(mu_);
    auto l = upsert(target, verdict, author_id, comment, clock_(), std::nullopt);
    std::lock_guard log_lock(log_mu_);
    if (log_.is_open()) {
        log_ << Json{{"label_id", l.label_id},   {"target", l.target},   {"verdict", verdict_name(l.verdict)},
                     {"author_id", l.author_id}, {"comment", l.comment}, {"created_at", ms_of(l.created_at)}}
                    .dump()
             << '\n';
        log_.flush();
    }
    return l;
}

FeedbackAggregate FeedbackStore::aggregate(std::string_view target) const {
    std::shared_lock lock(mu_);
    FeedbackAggregate agg;
    for (const auto& [key, l] : labels_) {
        if (key.first != target) continue;
        if (l.verdict == Verdict::correct) {
            ++agg.correct;
        } else {
            ++agg.incorrect;
        }
    }
    return agg;
}

std::vector<FeedbackLabel> FeedbackStore::labels() const {
    std::shared_lock lock(mu_);
    std::vector<FeedbackLabel> out;
    for (const auto& [_, l] : labels_) out.push_back(l);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.label_id < b.label_id; });
    return out;
}

std::string FeedbackStore::export_records(std::string_view salt) const {
    std::string out;
    for (const auto& l : labels()) {
        out += Json{{"target", l.target},
                    {"verdict", verdict_name(l.verdict)},
                    {"author_hash", hash_identity(salt, l.author_id)},
                    {"timestamp", format_iso8601(l.created_at)}}
                   .dump() +
               "\n";
    }
    return out;
}

}  // namespace bmet::forum
