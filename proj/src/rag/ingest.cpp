#include "bmet/rag/ingest.hpp"

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/error_catalog.hpp"

namespace bmet::rag {

std::size_t IngestReport::failed() const {
    std::size_t n = 0;
    for (const auto& f : files) n += f.error.has_value();
    return n;
}

std::unique_ptr<KnowledgeBase> build_knowledge_base(const std::vector<corpus::ManifestRecord>& records,
                                                    const embedding::Embedder& embedder, const IngestOptions& options,
                                                    IngestReport& report) {
    options.policy.validate();
    report = {};
    auto kb = std::make_unique<KnowledgeBase>(embedder.spec(), options.index);
    std::map<std::string, tools::ErrorCatalog> catalogs;

    for (const auto& rec : records) {
        DocumentReport dr;
        dr.path = rec.path.string();
        dr.doc_class = std::string(corpus::doc_class_name(rec.meta.doc_class));
        try {
            auto doc = corpus::parse_document(read_file(rec.path), rec.meta, Timestamp{});
            dr.doc_id = doc.doc_id;
            auto chunks = corpus::chunk_document(doc, options.policy);

            if (doc.doc_class == corpus::DocClass::error_catalog) {
                auto parsed = corpus::parse_error_catalog(doc, chunks);
                report.malformed_rows += parsed.malformed.size();
                auto& cat = catalogs[doc.device_model];
                for (auto& e : parsed.entries) {
                    cat.add(std::move(e));
                    ++report.catalog_entries;
                }
            }

            kb->register_device(doc.device_model, rec.device_class);
            std::vector<std::string> texts;
            texts.reserve(chunks.size());
            for (const auto& c : chunks) texts.push_back(corpus::retrieval_text(c, doc.title));
            auto vectors = embedder.embed_batch(texts);
            for (std::size_t i = 0; i < chunks.size(); ++i) {
                auto& c = chunks[i];
                kb->add_chunk({c.chunk_id, c.doc_id, doc.title, doc.device_model, c.doc_class, c.heading_path, c.text},
                              vectors[i].values);
            }
            dr.chunks = chunks.size();
            report.chunks += chunks.size();
            ++report.documents;
        } catch (const Error& e) {
            if (e.code() == Errc::DuplicateCode) throw;
            dr.error = std::string(e.code_name()) + ": " + e.what();
        }
        report.files.push_back(std::move(dr));
    }

    for (auto& [model, cat] : catalogs) kb->set_catalog(model, std::move(cat));
    for (const auto& s : kb->status()) report.segment_counts[s.device_class + "/" + s.name] = s.size;
    return kb;
}

}  // namespace bmet::rag
