#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmet {

// Machine-readable error codes shared by every module. The server maps
// these names straight into its JSON error bodies.
enum class Errc {
    EmptyDocument,
    InvalidLanguageTag,
    EmptyCode,
    DuplicateCode,
    InvalidPolicy,
    ProviderUnavailable,
    DimensionMismatch,
    DuplicateId,
    EmptySegment,
    MixedEmbedderSpec,
    FormatVersionMismatch,
    EmbedderSpecMismatch,
    CorruptFile,
    EmptyQuery,
    TooFewExemplars,
    UnknownIntent,
    NoCatalogLoaded,
    UnknownFormatSpec,
    NoScriptForModel,
    SessionComplete,
    UnknownSession,
    EmptyProfile,
    InvalidHorizon,
    StoreUnavailable,
    ProviderTimeout,
    DuplicateVote,
    NotAuthorized,
    UnknownPost,
    UnknownReply,
    RuleNotMet,
    AlreadyPromoted,
    UnknownTarget,
    InvalidArgument,
    EmptyManifest,
    InvalidConfig,
    InvalidToken,
    Expired,
    PortInUse,
    MissingStores,
    IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}
    explicit Error(Errc code) : std::runtime_error(std::string(errc_name(code))), code_(code) {}

    Errc code() const noexcept { return code_; }
    std::string_view code_name() const noexcept { return errc_name(code_); }

private:
    Errc code_;
};

}  // namespace bmet
