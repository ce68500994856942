#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bmet/common/time.hpp"

namespace bmet::forum {

enum class PostStatus { open, resolved };
std::string_view post_status_name(PostStatus s) noexcept;

struct ForumPost {
    std::string post_id;
    std::string author_id;
    std::string device_model;
    std::string title;
    std::string body;
    std::vector<std::string> tags;
    Timestamp created_at{};
    PostStatus status = PostStatus::open;
};

struct Reply {
    std::string reply_id;
    std::string post_id;
    std::string author_id;
    std::string body;
    std::size_t votes = 0;
    bool accepted = false;
    Timestamp created_at{};
};

struct PromotionRule {
    std::size_t min_votes = 3;
    bool require_accepted = true;
};

// Snapshot handed to the promoter once a reply is reserved for promotion.
struct PromotionTicket {
    ForumPost post;
    Reply reply;
};

// Posts, replies and votes. All writes go through one lock, which also makes
// accept atomic: at most one reply per post is accepted at any instant.
// Optionally mirrored to a line-delimited event log.
class Forum {
public:
    explicit Forum(Clock clock = system_clock());
    ~Forum();

    // Replays the log (a torn final line is dropped), rewrites it compacted and
    // appends every later event to it.
    void attach_log(const std::filesystem::path& path);

    // Throws Error(InvalidArgument) for an empty title or body.
    ForumPost create_post(const std::string& author_id, const std::string& device_model, const std::string& title,
                          const std::string& body, std::vector<std::string> tags = {});
    // Throws Error(UnknownPost) or Error(InvalidArgument).
    Reply create_reply(const std::string& post_id, const std::string& author_id, const std::string& body);
    // One vote per voter; a repeat raises Error(DuplicateVote) and changes nothing.
    Reply upvote(const std::string& reply_id, const std::string& voter_id);
    // Only the post author or an admin. Un-accepts the previous reply.
    // Throws Error(UnknownPost), Error(UnknownReply) or Error(NotAuthorized).
    ForumPost accept_reply(const std::string& post_id, const std::string& reply_id, const std::string& actor_id,
                           bool actor_is_admin = false);

    std::optional<ForumPost> post(std::string_view post_id) const;
    std::optional<Reply> reply(std::string_view reply_id) const;
    std::vector<ForumPost> posts() const;
    std::vector<Reply> replies(std::string_view post_id) const;

    // Reserves a reply for promotion. Throws Error(UnknownReply),
    // Error(RuleNotMet) or Error(AlreadyPromoted) (also while another promotion
    // of the same reply is in flight).
    PromotionTicket begin_promotion(const std::string& reply_id, const PromotionRule& rule);
    void complete_promotion(const std::string& reply_id, std::vector<std::string> chunk_ids);
    void abort_promotion(const std::string& reply_id);
    bool is_promoted(std::string_view reply_id) const;
    std::vector<std::string> promoted_chunks(std::string_view reply_id) const;

private:
    struct ReplyState {
        Reply reply;
        std::set<std::string> voters;
    };

    void apply_line(std::string_view line);
    void append(const std::string& line);
    std::string snapshot_lines() const;
    ForumPost& post_locked(std::string_view post_id);
    ReplyState& reply_locked(std::string_view reply_id);

    Clock clock_;
    mutable std::shared_mutex mu_;
    std::map<std::string, ForumPost, std::less<>> posts_;
    std::map<std::string, ReplyState, std::less<>> replies_;
    std::map<std::string, std::vector<std::string>, std::less<>> reply_order_;  // post -> reply ids
    std::map<std::string, std::vector<std::string>, std::less<>> promotions_;   // reply -> chunk ids
    std::set<std::string, std::less<>> pending_;
    std::size_t next_post_ = 1;
    std::size_t next_reply_ = 1;

    std::mutex log_mu_;
    std::ofstream log_;
};

enum class Verdict { correct, incorrect };
std::string_view verdict_name(Verdict v) noexcept;
std::optional<Verdict> parse_verdict(std::string_view s) noexcept;

struct FeedbackLabel {
    std::string label_id;
    std::string target;
    Verdict verdict = Verdict::correct;
    std::string comment;
    std::string author_id;
    Timestamp created_at{};
};

struct FeedbackAggregate {
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    bool operator==(const FeedbackAggregate&) const = default;
};

// One label per (author, target); a later verdict replaces the earlier one.
class FeedbackStore {
public:
    using TargetCheck = std::function<bool(std::string_view)>;

    explicit FeedbackStore(TargetCheck target_exists, Clock clock = system_clock());
    ~FeedbackStore();

    void attach_log(const std::filesystem::path& path);

    // Throws Error(UnknownTarget).
    FeedbackLabel record(const std::string& target, Verdict verdict, const std::string& author_id,
                         const std::string& comment = {});
    FeedbackAggregate aggregate(std::string_view target) const;
    std::vector<FeedbackLabel> labels() const;

    // `{"target","verdict","author_hash","timestamp"}` per line; authors are
    // replaced by salted SHA-256 digests.
    std::string export_records(std::string_view salt) const;

private:
    void apply_line(std::string_view line);
    FeedbackLabel upsert(std::string target, Verdict verdict, std::string author, std::string comment,
                         Timestamp at, std::optional<std::string> label_id);

    TargetCheck target_exists_;
    Clock clock_;
    mutable std::shared_mutex mu_;
    std::map<std::pair<std::string, std::string>, FeedbackLabel> labels_;  // (target, author)
    std::size_t next_label_ = 1;

    std::mutex log_mu_;
    std::ofstream log_;
};

// Salted SHA-256 of an identifier, hex.
std::string hash_identity(std::string_view salt, std::string_view id);

}  // namespace bmet::forum
