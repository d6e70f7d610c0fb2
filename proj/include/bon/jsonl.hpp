#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bon/types.hpp"

namespace bon {

using json = nlohmann::json;

json to_json(const ConversationSession& session);
ConversationSession session_from_json(const json& j);

json to_json(const CandidatePool& pool);
CandidatePool pool_from_json(const json& j, int standalone_cap = kStandaloneTokenCap);

// Sessions JSONL: one session object per line. Rejects duplicate
// (session_id, turn_index) rows and validates every session.
std::vector<ConversationSession> read_sessions_jsonl(const std::filesystem::path& path);
void write_sessions_jsonl(const std::filesystem::path& path,
                          const std::vector<ConversationSession>& sessions);

// Candidate pools JSONL: one pool object per line.
std::vector<CandidatePool> read_pools_jsonl(const std::filesystem::path& path,
                                            int standalone_cap = kStandaloneTokenCap);
void write_pools_jsonl(const std::filesystem::path& path,
                       const std::vector<CandidatePool>& pools);

// Shared line-oriented helpers used by the other *_jsonl readers.
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

} // namespace bon
