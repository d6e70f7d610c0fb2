#include "bon/jsonl.hpp"

#include <fstream>
#include <set>

#include "bon/errors.hpp"

namespace bon {

namespace {

json parse_line(const std::string& line, const std::filesystem::path& path, size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON");
    return j;
}

const json& require(const json& j, const char* field, const std::filesystem::path& path,
                    size_t lineno) {
    auto it = j.find(field);
    if (it == j.end())
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": missing field '" +
                        field + "'");
    return *it;
}

} // namespace

json to_json(const ConversationSession& session) {
    json turns = json::array();
    for (const Turn& t : session.history)
        turns.push_back({{"query", t.query}, {"response", t.response}});
    return {{"session_id", session.session_id},
            {"turn_index", session.turn_index},
            {"history", std::move(turns)},
            {"current_query", session.current_query}};
}

ConversationSession session_from_json(const json& j) {
    ConversationSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.turn_index = j.at("turn_index").get<int>();
    for (const json& t : j.at("history"))
        s.history.push_back(Turn{t.at("query").get<std::string>(),
                                 t.value("response", std::string())});
    s.current_query = j.at("current_query").get<std::string>();
    validate_session(s);
    return s;
}

json to_json(const CandidatePool& pool) {
    json cands = json::array();
    for (const ReformulationCandidate& c : pool.candidates)
        cands.push_back({{"rewrite", c.rewrite},
                         {"pseudo_response", c.pseudo_response},
                         {"candidate_index", c.candidate_index},
                         {"generation_seed", c.generation_seed}});
    return {{"session_id", pool.session.session_id},
            {"turn_index", pool.session.turn_index},
            {"candidates", std::move(cands)}};
}

CandidatePool pool_from_json(const json& j, int standalone_cap) {
    CandidatePool pool;
    pool.session.session_id = j.at("session_id").get<std::string>();
    pool.session.turn_index = j.at("turn_index").get<int>();
    for (const json& c : j.at("candidates")) {
        pool.candidates.push_back(make_candidate(
            c.at("rewrite").get<std::string>(), c.value("pseudo_response", std::string()),
            c.at("candidate_index").get<int>(), c.value("generation_seed", 0LL),
            standalone_cap));
    }
    validate_pool(pool);
    return pool;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<json> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        rows.push_back(parse_line(line, path, lineno));
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const json& j : rows) out << j.dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ConversationSession> read_sessions_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<ConversationSession> sessions;
    std::set<SessionRef> seen;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_line(line, path, lineno);
        require(j, "session_id", path, lineno);
        require(j, "turn_index", path, lineno);
        require(j, "history", path, lineno);
        require(j, "current_query", path, lineno);
        ConversationSession s;
        try {
            s = session_from_json(j);
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(s.ref()).second)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate session " +
                            s.ref().key());
        sessions.push_back(std::move(s));
    }
    return sessions;
}

void write_sessions_jsonl(const std::filesystem::path& path,
                          const std::vector<ConversationSession>& sessions) {
    std::vector<json> rows;
    rows.reserve(sessions.size());
    for (const ConversationSession& s : sessions) rows.push_back(to_json(s));
    write_jsonl(path, rows);
}

std::vector<CandidatePool> read_pools_jsonl(const std::filesystem::path& path, int standalone_cap) {
    std::vector<CandidatePool> pools;
    size_t lineno = 0;
    for (const json& j : read_jsonl(path)) {
        ++lineno;
        try {
            pools.push_back(pool_from_json(j, standalone_cap));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": pool record " + std::to_string(lineno) + ": " +
                            e.what());
        }
    }
    return pools;
}

void write_pools_jsonl(const std::filesystem::path& path, const std::vector<CandidatePool>& pools) {
    std::vector<json> rows;
    rows.reserve(pools.size());
    for (const CandidatePool& p : pools) rows.push_back(to_json(p));
    write_jsonl(path, rows);
}

} // namespace bon
