#include "bmet/corpus/normalize.hpp"

#include <cctype>

#include "bmet/common/error.hpp"

namespace bmet::corpus {

std::string normalize_code(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_sep = false;
    for (unsigned char c : raw) {
        bool sep = c == ' ' || c == '\t' || c == '_' || c == '.' || c == '-' || c == '\n' || c == '\r';
        if (sep) {
            pending_sep = true;
            continue;
        }
        if (pending_sep && !out.empty()) out.push_back('-');
        pending_sep = false;
        out.push_back(static_cast<char>(std::toupper(c)));
    }
    if (out.empty()) throw Error(Errc::EmptyCode, std::string(raw));
    return out;
}

}  // namespace bmet::corpus
