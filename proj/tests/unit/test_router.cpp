#include <doctest.h>

#include <cmath>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/router/router.hpp"
#include "support.hpp"

using namespace bmet;
using namespace bmet::router;

namespace {

std::shared_ptr<const embedding::Embedder> hashed() {
    static std::shared_ptr<const embedding::Embedder> e = embedding::make_embedder({});
    return e;
}

const IntentRouter& shipped_router() {
    static const auto r = [] {
        auto p = std::make_unique<IntentRouter>(hashed());
        p->load_exemplar_file(testing::data_dir() / "router" / "exemplars.txt");
        return p;
    }();
    return *r;
}

const std::unordered_set<std::string> kCatalog{"E-042", "E-101", "W-007"};

}  // namespace

TEST_CASE("code rule wins regardless of wording") {
    const auto& r = shipped_router();
    for (const char* q : {"E-042", "what does E-042 mean", "e-042 on screen", "how do I clean the probe, it shows E-042"}) {
        auto d = r.classify(q, kCatalog);
        CHECK(d.intent == Intent::error_code_lookup);
        REQUIRE(d.code);
        CHECK(*d.code == "E-042");
        CHECK(d.confidence == 1.0);
    }
}

TEST_CASE("code pattern and near misses") {
    const auto& r = shipped_router();
    CHECK(r.extract_code("error X-99 shown", kCatalog) == std::optional<std::string>("X-99"));
    CHECK(r.extract_code("E-O42 keeps appearing", kCatalog) == std::optional<std::string>("E-O42"));
    CHECK_FALSE(r.extract_code("SV-5000 will not boot", kCatalog));
    CHECK_FALSE(r.extract_code("how do I clean the probe", kCatalog));
    CHECK(r.classify("E-O42 keeps appearing", kCatalog).intent == Intent::error_code_lookup);
    // Near misses keep the raw token; lookup turns it into a disambiguation list.
    auto d = r.classify("E042 again", kCatalog);
    CHECK(d.intent == Intent::error_code_lookup);
    CHECK(d.code == std::optional<std::string>("E042"));
}

TEST_CASE("blank query") {
    const auto& r = shipped_router();
    CHECK_THROWS_WITH_AS(r.classify("", kCatalog), doctest::Contains("EmptyQuery"), Error);
    CHECK_THROWS_WITH_AS(r.classify(" \t\n", kCatalog), doctest::Contains("EmptyQuery"), Error);
}

TEST_CASE("typical phrasings route to their intent") {
    const auto& r = shipped_router();
    CHECK(r.classify("how do I disinfect the transducer", kCatalog).intent == Intent::instructional);
    CHECK(r.classify("analyze the attached log file", kCatalog).intent == Intent::log_analysis);
    auto d = r.classify("run the self test on this unit", kCatalog, "SV-5000");
    CHECK(d.intent == Intent::self_test);
    CHECK(d.device_model == std::optional<std::string>("SV-5000"));
}

TEST_CASE("gibberish falls below the intent threshold") {
    const auto& r = shipped_router();
    auto d = r.classify("zqxj vvkw plmf", kCatalog);
    CHECK(d.intent == Intent::unknown);
    CHECK(d.confidence < r.config().tau_intent);
}

TEST_CASE("centroids are unit length") {
    const auto& r = shipped_router();
    for (auto i : kRoutableIntents) {
        auto c = r.centroid(i);
        REQUIRE(c);
        CHECK(embedding::l2_norm(c->values) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("identical phrases give a centroid equal to the phrase") {
    IntentRouter r(hashed());
    r.register_exemplars(Intent::self_test, {"run diagnostics", "run diagnostics", "run diagnostics"});
    auto c = r.centroid(Intent::self_test);
    auto e = hashed()->embed("run diagnostics");
    REQUIRE(c);
    CHECK(embedding::cosine_similarity(*c, e) == doctest::Approx(1.0).epsilon(1e-9));
    auto d = r.classify("run diagnostics", {});
    CHECK(d.intent == Intent::self_test);
    CHECK(d.confidence == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("exemplar registration rules") {
    IntentRouter r(hashed());
    CHECK_THROWS_WITH_AS(r.register_exemplars(Intent::self_test, {"a", "b"}), doctest::Contains("TooFewExemplars"),
                         Error);
    CHECK_THROWS_WITH_AS(r.register_exemplars(Intent::unknown, {"a", "b", "c"}), doctest::Contains("UnknownIntent"),
                         Error);
    CHECK_THROWS_AS(parse_exemplars("nonsense_intent | hello\n"), Error);
    CHECK_THROWS_AS(parse_exemplars("instructional no bar\n"), Error);
}

TEST_CASE("exemplar file round trip") {
    auto text = read_file(testing::data_dir() / "router" / "exemplars.txt");
    auto parsed = parse_exemplars(text);
    CHECK(parse_exemplars(format_exemplars(parsed)) == parsed);
    for (auto i : kRoutableIntents) CHECK(parsed.at(i).size() >= 3);
}

TEST_CASE("shipped exemplars classify as their own intent") {
    const auto& r = shipped_router();
    for (const auto& [intent, phrases] : r.exemplars())
        for (const auto& p : phrases) {
            if (intent == Intent::error_code_lookup) {
                // no code slot, so never routed to lookup
                CHECK(r.classify(p, {}).intent != Intent::error_code_lookup);
                continue;
            }
            CAPTURE(p);
            CHECK(r.classify(p, {}).intent == intent);
        }
}

TEST_CASE("decision is the argmax of centroid similarity") {
    const auto& r = shipped_router();
    for (const char* q : {"how to replace the fuse in the power supply", "schedule for preventive maintenance",
                          "has anyone on the forum seen this", "check the event log for faults"}) {
        auto sims = r.centroid_similarities(q);
        auto best = std::max_element(sims.begin(), sims.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
        auto d = r.classify(q, {});
        CAPTURE(q);
        CHECK(d.intent == best->first);
        CHECK(d.confidence == doctest::Approx(best->second).epsilon(1e-9));
    }
}

TEST_CASE("registration order does not change the decision") {
    auto text = read_file(testing::data_dir() / "router" / "exemplars.txt");
    auto parsed = parse_exemplars(text);
    IntentRouter a(hashed()), b(hashed());
    a.load_exemplars(parsed);
    for (auto it = parsed.rbegin(); it != parsed.rend(); ++it) {
        auto phrases = it->second;
        std::reverse(phrases.begin(), phrases.end());
        b.register_exemplars(it->first, phrases);
    }
    for (const char* q : {"how to clean the probe", "show me the maintenance plan", "the log shows warnings"}) {
        auto da = a.classify(q, {}), db = b.classify(q, {});
        CHECK(da.intent == db.intent);
        CHECK(da.confidence == doctest::Approx(db.confidence).epsilon(1e-9));
    }
}

TEST_CASE("intent names round trip") {
    for (auto i : kRoutableIntents) CHECK(parse_intent(intent_name(i)) == i);
    CHECK_FALSE(parse_intent("bogus"));
}
