#include "bmet/forum/promotion.hpp"

#include "bmet/common/error.hpp"

namespace bmet::forum {

std::string community_document_text(const ForumPost& post, const Reply& reply) {
    return "# " + post.title + "\n\n## Question\n\n" + post.body + "\n\n## Accepted answer\n\n" + reply.body + "\n";
}

PromotionResult promote_to_knowledge(Forum& forum, const std::string& reply_id, const PromotionRule& rule,
                                     rag::KnowledgeBase& kb, const embedding::Embedder& embedder,
                                     const corpus::ChunkingPolicy& policy,
                                     const std::optional<std::filesystem::path>& persist_dir) {
    auto ticket = forum.begin_promotion(reply_id, rule);
    try {
        auto device_class = kb.device_class_of(ticket.post.device_model);
        if (!device_class)
            throw Error(Errc::StoreUnavailable, "no stores for device model " + ticket.post.device_model);

        corpus::DocumentMeta meta{ticket.post.device_model, corpus::DocClass::community, "en", ticket.post.title};
        auto doc = corpus::parse_document(community_document_text(ticket.post, ticket.reply), meta,
                                          ticket.reply.created_at);
        // Titles repeat across posts; the reply id keeps the document unique.
        doc.doc_id = corpus::make_doc_id(meta) + "-" + reply_id;
        auto chunks = corpus::chunk_document(doc, policy);

        std::vector<std::string> texts;
        for (const auto& c : chunks) texts.push_back(corpus::retrieval_text(c, doc.title));
        auto vectors = embedder.embed_batch(texts);

        PromotionResult result{reply_id, doc.doc_id, {}};
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto& c = chunks[i];
            kb.add_chunk({c.chunk_id, c.doc_id, doc.title, doc.device_model, c.doc_class, c.heading_path, c.text},
                         vectors[i].values);
            result.chunk_ids.push_back(c.chunk_id);
        }
        if (persist_dir) kb.persist_segment(*persist_dir, *device_class, corpus::DocClass::community);
        forum.complete_promotion(reply_id, result.chunk_ids);
        return result;
    } catch (...) {
        forum.abort_promotion(reply_id);
        throw;
    }
}

}  // namespace bmet::forum
