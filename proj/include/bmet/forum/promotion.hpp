#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bmet/corpus/chunker.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/forum/forum.hpp"
#include "bmet/rag/knowledge_base.hpp"

namespace bmet::forum {

struct PromotionResult {
    std::string reply_id;
    std::string doc_id;
    std::vector<std::string> chunk_ids;
};

// Text of the synthetic community document built from a post and its answer.
std::string community_document_text(const ForumPost& post, const Reply& reply);

// Chunks, embeds and inserts the post title, question and accepted answer into
// the community segment of the post's device class, then records provenance.
// Runs at most once per reply. When `persist_dir` is set the community segment
// and chunk table are rewritten there before the promotion is recorded.
// Throws Error(RuleNotMet), Error(AlreadyPromoted), Error(UnknownReply) or
// Error(StoreUnavailable) when the post's device has no stores.
PromotionResult promote_to_knowledge(Forum& forum, const std::string& reply_id, const PromotionRule& rule,
                                     rag::KnowledgeBase& kb, const embedding::Embedder& embedder,
                                     const corpus::ChunkingPolicy& policy = {},
                                     const std::optional<std::filesystem::path>& persist_dir = std::nullopt);

}  // namespace bmet::forum
