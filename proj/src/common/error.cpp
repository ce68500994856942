#include "bmet/common/error.hpp"

namespace bmet {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::EmptyDocument: return "EmptyDocument";
        case Errc::InvalidLanguageTag: return "InvalidLanguageTag";
        case Errc::EmptyCode: return "EmptyCode";
        case Errc::DuplicateCode: return "DuplicateCode";
        case Errc::InvalidPolicy: return "InvalidPolicy";
        case Errc::ProviderUnavailable: return "ProviderUnavailable";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::EmptySegment: return "EmptySegment";
        case Errc::MixedEmbedderSpec: return "MixedEmbedderSpec";
        case Errc::FormatVersionMismatch: return "FormatVersionMismatch";
        case Errc::EmbedderSpecMismatch: return "EmbedderSpecMismatch";
        case Errc::CorruptFile: return "CorruptFile";
        case Errc::EmptyQuery: return "EmptyQuery";
        case Errc::TooFewExemplars: return "TooFewExemplars";
        case Errc::UnknownIntent: return "UnknownIntent";
        case Errc::NoCatalogLoaded: return "NoCatalogLoaded";
        case Errc::UnknownFormatSpec: return "UnknownFormatSpec";
        case Errc::NoScriptForModel: return "NoScriptForModel";
        case Errc::SessionComplete: return "SessionComplete";
        case Errc::UnknownSession: return "UnknownSession";
        case Errc::EmptyProfile: return "EmptyProfile";
        case Errc::InvalidHorizon: return "InvalidHorizon";
        case Errc::StoreUnavailable: return "StoreUnavailable";
        case Errc::ProviderTimeout: return "ProviderTimeout";
        case Errc::DuplicateVote: return "DuplicateVote";
        case Errc::NotAuthorized: return "NotAuthorized";
        case Errc::UnknownPost: return "UnknownPost";
        case Errc::UnknownReply: return "UnknownReply";
        case Errc::RuleNotMet: return "RuleNotMet";
        case Errc::AlreadyPromoted: return "AlreadyPromoted";
        case Errc::UnknownTarget: return "UnknownTarget";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::EmptyManifest: return "EmptyManifest";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::InvalidToken: return "InvalidToken";
        case Errc::Expired: return "Expired";
        case Errc::PortInUse: return "PortInUse";
        case Errc::MissingStores: return "MissingStores";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace bmet
