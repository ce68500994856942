#include <doctest.h>

#include <atomic>
#include <thread>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/manifest.hpp"
#include "bmet/forum/forum.hpp"
#include "bmet/forum/promotion.hpp"
#include "bmet/rag/ingest.hpp"
#include "support.hpp"

using namespace bmet;
using namespace bmet::forum;

namespace {

Clock fixed_clock() {
    return [] { return Timestamp{std::chrono::milliseconds(1'700'000'000'000)}; };
}

struct Thread {
    Forum forum{fixed_clock()};
    ForumPost post;
    Reply a, b;

    Thread() {
        post = forum.create_post("tech-1", "SV-5000", "Image dropout on the left edge",
                                 "The left third of the image goes black after warm up.");
        a = forum.create_reply(post.post_id, "tech-2", "Reseat the transducer connector and clean the pins.");
        b = forum.create_reply(post.post_id, "tech-3", "Replace the receive module ribbon cable, it cracks near the clip.");
    }
};

std::unique_ptr<rag::KnowledgeBase> fresh_kb(const embedding::Embedder& emb) {
    rag::IngestReport report;
    return rag::build_knowledge_base(corpus::read_manifest(testing::data_dir() / "desk" / "manifest.txt"), emb, {},
                                     report);
}

}  // namespace

TEST_CASE("one vote per voter") {
    Thread t;
    CHECK(t.forum.upvote(t.a.reply_id, "v1").votes == 1);
    CHECK_THROWS_WITH_AS(t.forum.upvote(t.a.reply_id, "v1"), doctest::Contains("DuplicateVote"), Error);
    CHECK(t.forum.reply(t.a.reply_id)->votes == 1);
    CHECK(t.forum.upvote(t.a.reply_id, "v2").votes == 2);
    CHECK_THROWS_WITH_AS(t.forum.upvote("nope", "v1"), doctest::Contains("UnknownReply"), Error);
}

TEST_CASE("accepting B after A moves the mark") {
    Thread t;
    t.forum.accept_reply(t.post.post_id, t.a.reply_id, "tech-1");
    CHECK(t.forum.reply(t.a.reply_id)->accepted);
    auto p = t.forum.accept_reply(t.post.post_id, t.b.reply_id, "tech-1");
    CHECK_FALSE(t.forum.reply(t.a.reply_id)->accepted);
    CHECK(t.forum.reply(t.b.reply_id)->accepted);
    CHECK(p.status == PostStatus::resolved);
}

TEST_CASE("only the author or an admin accepts") {
    Thread t;
    CHECK_THROWS_WITH_AS(t.forum.accept_reply(t.post.post_id, t.a.reply_id, "tech-2"),
                         doctest::Contains("NotAuthorized"), Error);
    CHECK_FALSE(t.forum.reply(t.a.reply_id)->accepted);
    t.forum.accept_reply(t.post.post_id, t.a.reply_id, "someone", true);
    CHECK(t.forum.reply(t.a.reply_id)->accepted);
    CHECK_THROWS_WITH_AS(t.forum.accept_reply("post-missing", t.a.reply_id, "tech-1"),
                         doctest::Contains("UnknownPost"), Error);
}

TEST_CASE("reply belonging to another post cannot be accepted") {
    Thread t;
    auto p2 = t.forum.create_post("tech-1", "SV-5000", "Other", "Other body");
    CHECK_THROWS_AS(t.forum.accept_reply(p2.post_id, t.a.reply_id, "tech-1"), Error);
}

TEST_CASE("post validation") {
    Forum f(fixed_clock());
    CHECK_THROWS_AS(f.create_post("a", "SV-5000", "", "body"), Error);
    CHECK_THROWS_AS(f.create_post("a", "SV-5000", "title", "  "), Error);
    CHECK_THROWS_WITH_AS(f.create_reply("post-9", "a", "x"), doctest::Contains("UnknownPost"), Error);
}

TEST_CASE("concurrent accepts leave exactly one accepted reply") {
    Thread t;
    std::vector<Reply> rs{t.a, t.b};
    for (int i = 0; i < 6; ++i) rs.push_back(t.forum.create_reply(t.post.post_id, "tech-x", "r" + std::to_string(i)));
    std::vector<std::thread> threads;
    for (int round = 0; round < 50; ++round)
        for (const auto& r : rs)
            threads.emplace_back([&t, id = r.reply_id] { t.forum.accept_reply(t.post.post_id, id, "tech-1"); });
    for (auto& th : threads) th.join();
    std::size_t accepted = 0;
    for (const auto& r : t.forum.replies(t.post.post_id)) accepted += r.accepted;
    CHECK(accepted == 1);
}

TEST_CASE("promotion needs the rule") {
    auto emb = embedding::make_embedder({});
    auto kb = fresh_kb(*emb);
    Thread t;
    t.forum.accept_reply(t.post.post_id, t.b.reply_id, "tech-1");
    t.forum.upvote(t.b.reply_id, "v1");
    t.forum.upvote(t.b.reply_id, "v2");
    CHECK_THROWS_WITH_AS(promote_to_knowledge(t.forum, t.b.reply_id, {}, *kb, *emb), doctest::Contains("RuleNotMet"),
                         Error);
    t.forum.upvote(t.a.reply_id, "v1");
    t.forum.upvote(t.a.reply_id, "v2");
    t.forum.upvote(t.a.reply_id, "v3");
    CHECK_THROWS_WITH_AS(promote_to_knowledge(t.forum, t.a.reply_id, {}, *kb, *emb), doctest::Contains("RuleNotMet"),
                         Error);

    const auto* community = kb->segment("ultrasound", corpus::DocClass::community);
    const auto before = community->size();
    t.forum.upvote(t.b.reply_id, "v3");
    auto res = promote_to_knowledge(t.forum, t.b.reply_id, {}, *kb, *emb);
    CHECK(community->size() > before);
    CHECK(community->size() == before + res.chunk_ids.size());
    CHECK(t.forum.is_promoted(t.b.reply_id));
    CHECK(t.forum.promoted_chunks(t.b.reply_id) == res.chunk_ids);
    for (const auto& id : res.chunk_ids) {
        auto c = kb->chunk(id);
        REQUIRE(c);
        CHECK(c->doc_class == corpus::DocClass::community);
        CHECK(c->device_model == "SV-5000");
    }
    CHECK_THROWS_WITH_AS(promote_to_knowledge(t.forum, t.b.reply_id, {}, *kb, *emb),
                         doctest::Contains("AlreadyPromoted"), Error);
    CHECK(community->size() == before + res.chunk_ids.size());
}

TEST_CASE("promoted answer is retrievable by the original question") {
    auto emb = embedding::make_embedder({});
    auto kb = fresh_kb(*emb);
    Thread t;
    t.forum.accept_reply(t.post.post_id, t.b.reply_id, "tech-1");
    for (const char* v : {"v1", "v2", "v3"}) t.forum.upvote(t.b.reply_id, v);
    auto res = promote_to_knowledge(t.forum, t.b.reply_id, {}, *kb, *emb);
    auto q = emb->embed(t.post.title + " " + t.post.body);
    auto hits = kb->segment("ultrasound", corpus::DocClass::community)->search(q.values, 5);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].chunk_id == res.chunk_ids[0]);
    CHECK(community_document_text(t.post, *t.forum.reply(t.b.reply_id)).find(t.b.body) != std::string::npos);
}

TEST_CASE("concurrent promotion runs once") {
    auto emb = embedding::make_embedder({});
    auto kb = fresh_kb(*emb);
    Thread t;
    t.forum.accept_reply(t.post.post_id, t.b.reply_id, "tech-1");
    for (const char* v : {"v1", "v2", "v3"}) t.forum.upvote(t.b.reply_id, v);
    const auto before = kb->segment("ultrasound", corpus::DocClass::community)->size();
    std::atomic<int> ok{0}, already{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&] {
            try {
                promote_to_knowledge(t.forum, t.b.reply_id, {}, *kb, *emb);
                ++ok;
            } catch (const Error& e) {
                if (e.code() == Errc::AlreadyPromoted) ++already;
            }
        });
    for (auto& th : threads) th.join();
    CHECK(ok == 1);
    CHECK(already == 7);
    CHECK(kb->segment("ultrasound", corpus::DocClass::community)->size() ==
          before + t.forum.promoted_chunks(t.b.reply_id).size());
}

TEST_CASE("promotion to an unknown device") {
    auto emb = embedding::make_embedder({});
    auto kb = fresh_kb(*emb);
    Forum f(fixed_clock());
    auto p = f.create_post("a", "XR-9", "t", "b");
    auto r = f.create_reply(p.post_id, "b", "answer");
    f.accept_reply(p.post_id, r.reply_id, "a");
    for (const char* v : {"v1", "v2", "v3"}) f.upvote(r.reply_id, v);
    CHECK_THROWS_WITH_AS(promote_to_knowledge(f, r.reply_id, {}, *kb, *emb), doctest::Contains("StoreUnavailable"),
                         Error);
    CHECK_FALSE(f.is_promoted(r.reply_id));
}

TEST_CASE("forum log replays to the same state") {
    testing::TempDir dir;
    std::string post_id, a_id, b_id;
    {
        Forum f(fixed_clock());
        f.attach_log(dir / "forum.jsonl");
        auto p = f.create_post("tech-1", "SV-5000", "Title", "Body", {"probe"});
        auto a = f.create_reply(p.post_id, "tech-2", "A");
        auto b = f.create_reply(p.post_id, "tech-3", "B");
        f.upvote(a.reply_id, "v1");
        f.upvote(b.reply_id, "v1");
        f.upvote(b.reply_id, "v2");
        f.accept_reply(p.post_id, a.reply_id, "tech-1");
        f.accept_reply(p.post_id, b.reply_id, "tech-1");
        post_id = p.post_id;
        a_id = a.reply_id;
        b_id = b.reply_id;
    }
    {
        std::ofstream torn(dir / "forum.jsonl", std::ios::app);
        torn << "{\"ev\":\"upvote\",\"re";
    }
    Forum g(fixed_clock());
    g.attach_log(dir / "forum.jsonl");
    REQUIRE(g.post(post_id));
    CHECK(g.post(post_id)->tags == std::vector<std::string>{"probe"});
    CHECK(g.reply(a_id)->votes == 1);
    CHECK(g.reply(b_id)->votes == 2);
    CHECK_FALSE(g.reply(a_id)->accepted);
    CHECK(g.reply(b_id)->accepted);
    CHECK_THROWS_AS(g.upvote(b_id, "v2"), Error);
    auto next = g.create_post("x", "SV-5000", "t", "b");
    CHECK(next.post_id != post_id);
}

TEST_CASE("feedback keeps one label per author and target") {
    FeedbackStore s([](std::string_view t) { return t.rfind("ans-", 0) == 0; }, fixed_clock());
    s.record("ans-1", Verdict::correct, "u1");
    s.record("ans-1", Verdict::correct, "u2");
    CHECK(s.aggregate("ans-1") == FeedbackAggregate{2, 0});
    s.record("ans-1", Verdict::incorrect, "u1", "wrong fuse");
    CHECK(s.aggregate("ans-1") == FeedbackAggregate{1, 1});
    CHECK(s.labels().size() == 2);
    CHECK(s.aggregate("ans-2") == FeedbackAggregate{0, 0});
    CHECK_THROWS_WITH_AS(s.record("post-1", Verdict::correct, "u1"), doctest::Contains("UnknownTarget"), Error);
}

TEST_CASE("feedback export hides authors") {
    FeedbackStore s([](std::string_view) { return true; }, fixed_clock());
    s.record("ans-1", Verdict::correct, "alice-technician");
    auto out = s.export_records("salt");
    CHECK(out.find("alice-technician") == std::string::npos);
    CHECK(out.find(hash_identity("salt", "alice-technician")) != std::string::npos);
    CHECK(hash_identity("salt", "a") != hash_identity("pepper", "a"));
    CHECK(hash_identity("salt", "a").size() == 64);
}

TEST_CASE("feedback log replay") {
    testing::TempDir dir;
    auto any = [](std::string_view) { return true; };
    {
        FeedbackStore s(any, fixed_clock());
        s.attach_log(dir / "fb.jsonl");
        s.record("ans-1", Verdict::correct, "u1");
        s.record("ans-1", Verdict::incorrect, "u1");
        s.record("ans-1", Verdict::correct, "u2");
    }
    FeedbackStore t(any, fixed_clock());
    t.attach_log(dir / "fb.jsonl");
    CHECK(t.aggregate("ans-1") == FeedbackAggregate{1, 1});
    CHECK(parse_verdict("incorrect") == Verdict::incorrect);
    CHECK_FALSE(parse_verdict("maybe"));
}
