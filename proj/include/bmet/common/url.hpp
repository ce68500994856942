#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace bmet {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // starts with '/'
};

// Splits an http(s) URL into the origin httplib::Client wants and the request path.
std::optional<SplitUrl> split_url(std::string_view url);

}  // namespace bmet
