#pragma once

#include <json.hpp>

#include "bmet/corpus/error_catalog.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/rag/engine.hpp"
#include "bmet/rag/knowledge_base.hpp"
#include "bmet/vecstore/hnsw.hpp"
#include "bmet/tools/log_analysis.hpp"
#include "bmet/tools/maintenance.hpp"
#include "bmet/tools/self_test.hpp"
#include "bmet/vecstore/segment.hpp"

namespace bmet::rag {

using Json = nlohmann::json;

Json to_json(const embedding::EmbedderSpec& spec);
embedding::EmbedderSpec embedder_spec_from_json(const Json& j);

Json to_json(const vecstore::HnswParams& p);
vecstore::HnswParams hnsw_params_from_json(const Json& j);

Json to_json(const ChunkRecord& c);
ChunkRecord chunk_record_from_json(const Json& j);

Json to_json(const corpus::ErrorCodeEntry& e);
corpus::ErrorCodeEntry error_entry_from_json(const Json& j);

Json to_json(const vecstore::SearchHit& h);

Json to_json(const tools::ErrorCodeAnswer& a);
Json to_json(const tools::LogReport& r);
Json to_json(const tools::SelfTestStep& s);
Json to_json(const tools::SelfTestReport& r);
Json to_json(const tools::SelfTestSession& s);
Json to_json(const tools::MaintenancePlan& p);
Json to_json(const RagAnswer& a);

}  // namespace bmet::rag
