#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bmet::rag {

// Trigram counts for one language. Grams are over lowercased letters with a
// single space standing for word boundaries.
struct LanguageProfile {
    std::string tag;
    std::string name;
    std::map<std::u32string, std::size_t> counts;
    std::size_t total = 0;
};

std::vector<std::u32string> text_trigrams(std::string_view text);
// Keeps the `max_grams` most frequent trigrams (ties by gram).
LanguageProfile build_language_profile(std::string_view sample, std::string tag, std::string name,
                                       std::size_t max_grams = 1000);

// "tag <t>", "name <n>", then `<gram>\t<count>` lines with '_' for space.
std::string format_language_profile(const LanguageProfile& p);
LanguageProfile parse_language_profile(std::string_view text);

struct LanguageGuess {
    std::string tag;
    bool flagged = false;  // default tag used: no usable signal
};

// Multinomial naive Bayes over trigram counts with additive smoothing.
class LanguageDetector {
public:
    explicit LanguageDetector(std::string default_tag = "en");

    void add(LanguageProfile profile);
    // Loads every *.profile file in the directory.
    void load_dir(const std::filesystem::path& dir);
    std::vector<std::string> tags() const;
    const std::string& default_tag() const noexcept { return default_tag_; }

    LanguageGuess detect(std::string_view text) const;

private:
    std::string default_tag_;
    std::vector<LanguageProfile> profiles_;
};

class TranslationProvider {
public:
    virtual ~TranslationProvider() = default;
    // nullopt when the provider cannot translate between the two tags.
    virtual std::optional<std::string> translate(std::string_view text, std::string_view from,
                                                 std::string_view to) const = 0;
};

// Default provider: never translates.
class IdentityTranslator final : public TranslationProvider {
public:
    std::optional<std::string> translate(std::string_view, std::string_view, std::string_view) const override {
        return std::nullopt;
    }
};

struct LocalizedText {
    std::string text;
    std::string language;
    bool untranslated = false;
};

// Same-language input is returned as is. Otherwise the provider is asked; when
// it declines, the source text comes back with `untranslated` set.
LocalizedText localize(std::string_view text, std::string_view source_tag, std::string_view target_tag,
                       const TranslationProvider& provider);

}  // namespace bmet::rag
