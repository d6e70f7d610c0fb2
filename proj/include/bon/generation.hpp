#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bon/errors.hpp"
#include "bon/types.hpp"

namespace bon {

// Prompt skeleton: an instruction, demonstration blocks, then the session
// context and current question, in that order. Text content ships as data;
// only the structure and the output markers are fixed.
struct PromptTemplate {
    std::string instruction;
    std::vector<std::string> demonstrations;

    static PromptTemplate builtin_default();
    // JSON file {"instruction": "...", "demonstrations": ["...", ...]}.
    static PromptTemplate load(const std::filesystem::path& path);
};

// Deterministic rendering; a session with a blank current query raises
// PromptError.
std::string render_prompt(const PromptTemplate& tmpl, const ConversationSession& session);

// Result of parsing a raw completion against the expected
// "... rewritten as: <rewrite>\nResponse: <response>" layout.
struct ParsedOutput {
    bool ok = false;
    std::string rewrite;
    std::string pseudo_response;
    std::string raw; // preserved verbatim for audit when parsing fails
};

// Marker matching is case-insensitive; surrounding whitespace is trimmed.
// Both markers must be present, but the response segment may be empty.
ParsedOutput parse_output(std::string_view raw);

// Formats a (reason, rewrite, response) triple in the layout parse_output
// expects; parse_output(format_output(...)) recovers rewrite and response.
std::string format_output(std::string_view reason, std::string_view rewrite,
                          std::string_view response);

struct GenerationConfig {
    int n = 16;                  // candidates per session
    double temperature = 0.7;
    int max_output_tokens = 256;
    long long request_seed_base = 0;
    int max_attempts = 3;        // per request (transport and parse retries)
    int backoff_ms = 200;
    int max_in_flight = 4;
    int standalone_cap = kStandaloneTokenCap;

    void validate() const;
};

struct GenerationRequest {
    std::string prompt;
    double temperature = 0.7;
    long long seed = 0;
    int max_tokens = 256;
    SessionRef session;
    int request_index = 0;
};

// Transient transport failure; generate_pool retries these per policy.
class TransportError : public Error {
public:
    using Error::Error;
};

class GenerationClient {
public:
    virtual ~GenerationClient() = default;
    // Returns the raw completion text. Throws TransportError on transient
    // failures and NotFoundError when a fixture has no entry for the request.
    virtual std::string complete(const GenerationRequest& request) = 0;
};

// Replays stored outputs keyed by (session_id, turn_index, request_index).
// Fixture JSONL rows: {"session_id","turn_index","request_index","raw_text"}.
class FixtureClient final : public GenerationClient {
public:
    static FixtureClient load(const std::filesystem::path& path);
    std::string complete(const GenerationRequest& request) override;

    void add(const SessionRef& session, int request_index, std::string raw_text);
    void save(const std::filesystem::path& path) const;

private:
    std::map<std::pair<SessionRef, int>, std::string> outputs_;
};

// Chat-completions-style HTTP client. Endpoint, key, and model come from the
// constructor or the GENERATION_ENDPOINT / GENERATION_API_KEY /
// GENERATION_MODEL environment variables.
class HttpClient final : public GenerationClient {
public:
    HttpClient(std::string endpoint, std::string api_key, std::string model);
    static HttpClient from_env();
    std::string complete(const GenerationRequest& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
    std::string model_;
};

// Issues n completions (seeds request_seed_base + i), parses each, and
// assembles the pool in request order. Unparseable outputs are retried with
// a bumped seed, then dropped; candidate_index is reindexed to stay
// contiguous and dropped request indices are recorded on the pool. Throws
// GenerationError when every request fails.
CandidatePool generate_pool(GenerationClient& client, const PromptTemplate& tmpl,
                            const ConversationSession& session, const GenerationConfig& config);

} // namespace bon
