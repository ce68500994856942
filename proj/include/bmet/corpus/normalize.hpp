#pragma once

#include <string>
#include <string_view>

namespace bmet::corpus {

// Canonical error-code form: uppercase, runs of {space, tab, '_', '.', '-'}
// collapsed to a single '-', no leading or trailing '-'. Idempotent.
// Throws Error(EmptyCode) when nothing is left.
std::string normalize_code(std::string_view raw);

}  // namespace bmet::corpus
