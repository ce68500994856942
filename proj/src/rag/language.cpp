#include "bmet/rag/language.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::rag {

namespace {

bool is_letter(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7);
}

char32_t lower(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    return c;
}

}  // namespace

std::vector<std::u32string> text_trigrams(std::string_view text) {
    std::u32string norm = U" ";
    for (char32_t c : utf8_decode(text)) {
        if (is_letter(c)) {
            norm += lower(c);
        } else if (norm.back() != U' ') {
            norm += U' ';
        }
    }
    if (norm.back() != U' ') norm += U' ';
    std::vector<std::u32string> out;
    if (norm.size() < 3) return out;
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
        auto g = norm.substr(i, 3);
        // A gram spanning a word boundary on both sides carries no signal.
        if (g[1] == U' ') continue;
        out.push_back(std::move(g));
    }
    return out;
}

LanguageProfile build_language_profile(std::string_view sample, std::string tag, std::string name,
                                       std::size_t max_grams) {
    std::map<std::u32string, std::size_t> all;
    for (auto& g : text_trigrams(sample)) ++all[g];
    std::vector<std::pair<std::u32string, std::size_t>> ranked(all.begin(), all.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_grams) ranked.resize(max_grams);
    LanguageProfile p{std::move(tag), std::move(name), {}, 0};
    for (auto& [g, n] : ranked) {
        p.counts.emplace(g, n);
        p.total += n;
    }
    return p;
}

std::string format_language_profile(const LanguageProfile& p) {
    std::string out = "tag " + p.tag + "\nname " + p.name + "\n";
    std::vector<std::pair<std::u32string, std::size_t>> ranked(p.counts.begin(), p.counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [g, n] : ranked) {
        auto s = utf8_encode(g);
        std::replace(s.begin(), s.end(), ' ', '_');
        out += s + "\t" + std::to_string(n) + "\n";
    }
    return out;
}

LanguageProfile parse_language_profile(std::string_view text) {
    LanguageProfile p;
    for (auto line : split_lines(text)) {
        if (trim(line).empty() || line.front() == '#') continue;
        if (line.starts_with("tag ")) {
            p.tag = std::string(trim(line.substr(4)));
            continue;
        }
        if (line.starts_with("name ")) {
            p.name = std::string(trim(line.substr(5)));
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw Error(Errc::InvalidArgument, "language profile: missing tab");
        std::string gram(line.substr(0, tab));
        std::replace(gram.begin(), gram.end(), '_', ' ');
        auto num = line.substr(tab + 1);
        std::size_t n = 0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
        if (ec != std::errc{}) throw Error(Errc::InvalidArgument, "language profile: bad count");
        p.counts[utf8_decode(gram)] += n;
        p.total += n;
    }
    if (p.tag.empty()) throw Error(Errc::InvalidArgument, "language profile without tag");
    return p;
}

LanguageDetector::LanguageDetector(std::string default_tag) : default_tag_(std::move(default_tag)) {}

void LanguageDetector::add(LanguageProfile profile) {
    auto it = std::find_if(profiles_.begin(), profiles_.end(), [&](const auto& p) { return p.tag == profile.tag; });
    if (it != profiles_.end()) {
        *it = std::move(profile);
    } else {
        profiles_.push_back(std::move(profile));
    }
    std::sort(profiles_.begin(), profiles_.end(), [](const auto& a, const auto& b) { return a.tag < b.tag; });
}

void LanguageDetector::load_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& ent : std::filesystem::directory_iterator(dir)) {
        if (ent.is_regular_file() && ent.path().extension() == ".profile") files.push_back(ent.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add(parse_language_profile(read_file(f)));
}

std::vector<std::string> LanguageDetector::tags() const {
    std::vector<std::string> out;
    for (const auto& p : profiles_) out.push_back(p.tag);
    return out;
}

LanguageGuess LanguageDetector::detect(std::string_view text) const {
    LanguageGuess guess{default_tag_, true};
    auto grams = text_trigrams(text);
    if (grams.empty() || profiles_.empty()) return guess;

    constexpr double alpha = 0.5;
    constexpr double vocab = 20000.0;
    double best = -std::numeric_limits<double>::infinity();
    bool any_seen = false;
    for (const auto& p : profiles_) {
        double score = 0.0;
        const double denom = std::log(static_cast<double>(p.total) + alpha * vocab);
        for (const auto& g : grams) {
            auto it = p.counts.find(g);
            double c = it == p.counts.end() ? 0.0 : static_cast<double>(it->second);
            any_seen = any_seen || c > 0.0;
            score += std::log(c + alpha) - denom;
        }
        if (score > best) {
            best = score;
            guess.tag = p.tag;
        }
    }
    if (!any_seen) return {default_tag_, true};
    guess.flagged = false;
    return guess;
}

LocalizedText localize(std::string_view text, std::string_view source_tag, std::string_view target_tag,
                       const TranslationProvider& provider) {
    if (source_tag == target_tag) return {std::string(text), std::string(source_tag), false};
    if (auto t = provider.translate(text, source_tag, target_tag)) return {std::move(*t), std::string(target_tag), false};
    return {std::string(text), std::string(source_tag), true};
}

}  // namespace bmet::rag
