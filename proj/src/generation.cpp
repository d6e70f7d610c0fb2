#include "bon/generation.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <json.hpp>

#include "bon/jsonl.hpp"
#include "bon/text.hpp"

#include <httplib.h>

namespace bon {

using json = nlohmann::json;

namespace {

// Seed offset between parse-retry attempts of the same request; larger than
// any realistic candidate count so retry seeds never collide with the
// per-request seeds request_seed_base + i.
constexpr long long kRetrySeedStride = 1000003;

const char* kRewriteMarker = "rewritten as:";
const char* kResponseMarker = "response:";

size_t ifind(std::string_view haystack, std::string_view needle, size_t from = 0) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        size_t k = 0;
        while (k < needle.size() &&
               std::tolower(static_cast<unsigned char>(haystack[i + k])) ==
                   std::tolower(static_cast<unsigned char>(needle[k])))
            ++k;
        if (k == needle.size()) return i;
    }
    return std::string_view::npos;
}

} // namespace

PromptTemplate PromptTemplate::builtin_default() {
    PromptTemplate tmpl;
    tmpl.instruction =
        "You are given an information-seeking dialog. Turn the current question into a "
        "self-contained rewrite that carries the full intent of the conversation, and also "
        "produce an informative response that answers it. Begin the rewrite with a short "
        "sentence explaining your reasoning.";
    tmpl.demonstrations = {
        "Example #1:\n"
        "Question: What should I look for in a road bike?\n"
        "Rewrite: This is the first turn. So the question should be rewritten as: What should "
        "I look for when buying a road bike?\n"
        "Response: Frame material, groupset quality, and fit matter most. Aluminum frames are "
        "affordable and stiff, while carbon dampens vibration. Make sure the geometry matches "
        "how upright you want to ride.\n"
        "\n"
        "Question: How much should I spend?\n"
        "Rewrite: Based on Turn 1, you are asking about buying a road bike. So the question "
        "should be rewritten as: How much should I spend on a road bike as a beginner?\n"
        "Response: Entry-level road bikes with reliable components start around 800 dollars. "
        "Spending 1200 to 1500 dollars gets a lighter frame and a noticeably better groupset; "
        "beyond that, returns diminish for a first bike."};
    return tmpl;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": invalid template JSON: " + e.what());
    }
    PromptTemplate tmpl;
    tmpl.instruction = j.at("instruction").get<std::string>();
    if (j.contains("demonstrations"))
        tmpl.demonstrations = j.at("demonstrations").get<std::vector<std::string>>();
    return tmpl;
}

std::string render_prompt(const PromptTemplate& tmpl, const ConversationSession& session) {
    if (is_blank(session.current_query))
        throw PromptError("session " + session.ref().key() + " has no question to reformulate");

    std::string prompt = tmpl.instruction;
    prompt += "\n";
    for (const std::string& demo : tmpl.demonstrations) {
        prompt += "\n";
        prompt += demo;
        prompt += "\n";
    }
    prompt += "\nContext:\n";
    for (const Turn& turn : session.history) {
        prompt += "Question: " + turn.query + "\n";
        prompt += "Response: " + turn.response + "\n";
    }
    prompt += "\nCurrent Question: " + session.current_query + "\n";
    prompt +=
        "\nGive the rewrite and response of the Current Question under the Context. The output "
        "format must always be: \"Rewrite: $Reason. So the question should be rewritten as: "
        "$Rewrite\\nResponse: $Response\". Always produce a rewrite and an informative "
        "response; never ask for clarification.";
    return prompt;
}

ParsedOutput parse_output(std::string_view raw) {
    ParsedOutput out;
    out.raw = std::string(raw);

    size_t rw = ifind(raw, kRewriteMarker);
    if (rw == std::string_view::npos) return out;
    size_t rewrite_begin = rw + std::char_traits<char>::length(kRewriteMarker);
    size_t resp = ifind(raw, kResponseMarker, rewrite_begin);
    if (resp == std::string_view::npos) return out;

    std::string_view rewrite = trim(raw.substr(rewrite_begin, resp - rewrite_begin));
    std::string_view response =
        trim(raw.substr(resp + std::char_traits<char>::length(kResponseMarker)));
    if (rewrite.empty()) return out;

    out.ok = true;
    out.rewrite = std::string(rewrite);
    out.pseudo_response = std::string(response);
    return out;
}

std::string format_output(std::string_view reason, std::string_view rewrite,
                          std::string_view response) {
    std::string out = "Rewrite: ";
    out += reason;
    out += ". So the question should be rewritten as: ";
    out += rewrite;
    out += "\nResponse: ";
    out += response;
    return out;
}

void GenerationConfig::validate() const {
    if (n < 1) throw ConfigError("generation: n must be >= 1, got " + std::to_string(n));
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ConfigError("generation: temperature must be in [0,2], got " +
                          std::to_string(temperature));
    if (max_output_tokens < 1) throw ConfigError("generation: max_output_tokens must be >= 1");
    if (max_attempts < 1) throw ConfigError("generation: max_attempts must be >= 1");
    if (max_in_flight < 1) throw ConfigError("generation: max_in_flight must be >= 1");
    if (standalone_cap < 1) throw ConfigError("generation: standalone_cap must be >= 1");
}

FixtureClient FixtureClient::load(const std::filesystem::path& path) {
    FixtureClient client;
    size_t row = 0;
    for (const json& j : read_jsonl(path)) {
        ++row;
        try {
            SessionRef ref{j.at("session_id").get<std::string>(), j.at("turn_index").get<int>()};
            client.add(ref, j.at("request_index").get<int>(), j.at("raw_text").get<std::string>());
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": fixture record " + std::to_string(row) + ": " +
                            e.what());
        }
    }
    return client;
}

void FixtureClient::add(const SessionRef& session, int request_index, std::string raw_text) {
    outputs_[{session, request_index}] = std::move(raw_text);
}

void FixtureClient::save(const std::filesystem::path& path) const {
    std::vector<json> rows;
    rows.reserve(outputs_.size());
    for (const auto& [key, raw] : outputs_) {
        rows.push_back({{"session_id", key.first.session_id},
                        {"turn_index", key.first.turn_index},
                        {"request_index", key.second},
                        {"raw_text", raw}});
    }
    write_jsonl(path, rows);
}

std::string FixtureClient::complete(const GenerationRequest& request) {
    auto it = outputs_.find({request.session, request.request_index});
    if (it == outputs_.end())
        throw NotFoundError("fixture miss: " + request.session.key() + " request " +
                            std::to_string(request.request_index));
    return it->second;
}

HttpClient::HttpClient(std::string endpoint, std::string api_key, std::string model)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {
    if (endpoint_.empty()) throw ConfigError("http client: endpoint is empty");
}

HttpClient HttpClient::from_env() {
    const char* endpoint = std::getenv("GENERATION_ENDPOINT");
    if (!endpoint || !*endpoint)
        throw ConfigError("GENERATION_ENDPOINT is not set");
    const char* key = std::getenv("GENERATION_API_KEY");
    const char* model = std::getenv("GENERATION_MODEL");
    return HttpClient(endpoint, key ? key : "", model && *model ? model : "default");
}

std::string HttpClient::complete(const GenerationRequest& request) {
    // Split the endpoint URL into base (scheme://host:port) and path.
    size_t scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("http client: endpoint '" + endpoint_ + "' has no scheme");
    size_t path_begin = endpoint_.find('/', scheme_end + 3);
    std::string base = path_begin == std::string::npos ? endpoint_ : endpoint_.substr(0, path_begin);
    std::string path =
        path_begin == std::string::npos ? "/v1/chat/completions" : endpoint_.substr(path_begin);

    json body = {{"model", model_},
                 {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                 {"temperature", request.temperature},
                 {"seed", request.seed},
                 {"max_tokens", request.max_tokens}};

    httplib::Client cli(base);
    cli.set_connection_timeout(std::chrono::seconds(15));
    cli.set_read_timeout(std::chrono::seconds(120));
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw TransportError("no response from " + endpoint_ + ": " +
                             httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint_);
    if (res->status != 200)
        throw Error("HTTP " + std::to_string(res->status) + " from " + endpoint_ + ": " +
                    res->body);

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
        throw Error("malformed completion response from " + endpoint_);
    const json& choice = reply["choices"][0];
    if (choice.contains("message"))
        return choice["message"].value("content", "");
    return choice.value("text", "");
}

CandidatePool generate_pool(GenerationClient& client, const PromptTemplate& tmpl,
                            const ConversationSession& session, const GenerationConfig& config) {
    config.validate();
    validate_session(session);
    const std::string prompt = render_prompt(tmpl, session);
    const int n = config.n;

    std::vector<std::optional<ParsedOutput>> parsed(static_cast<size_t>(n));
    std::vector<std::exception_ptr> failures(static_cast<size_t>(n));

    // Transport retries resend the same request; an unparseable output is
    // retried with a bumped seed so sampling can land elsewhere.
    auto run_request = [&](int i) {
        int transport_failures = 0;
        int parse_failures = 0;
        while (true) {
            GenerationRequest request;
            request.prompt = prompt;
            request.temperature = config.temperature;
            request.seed = config.request_seed_base + i +
                           static_cast<long long>(parse_failures) * kRetrySeedStride;
            request.max_tokens = config.max_output_tokens;
            request.session = session.ref();
            request.request_index = i;
            std::string raw;
            try {
                raw = client.complete(request);
            } catch (const TransportError&) {
                if (++transport_failures >= config.max_attempts) {
                    failures[static_cast<size_t>(i)] = std::current_exception();
                    return;
                }
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(config.backoff_ms * transport_failures));
                continue;
            } catch (...) {
                failures[static_cast<size_t>(i)] = std::current_exception();
                return;
            }
            ParsedOutput output = parse_output(raw);
            if (output.ok) {
                parsed[static_cast<size_t>(i)] = std::move(output);
                return;
            }
            if (++parse_failures >= config.max_attempts) return; // dropped
        }
    };

    if (config.max_in_flight == 1 || n == 1) {
        for (int i = 0; i < n; ++i) run_request(i);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_request(i);
        };
        std::vector<std::thread> threads;
        int thread_count = std::min(config.max_in_flight, n);
        threads.reserve(static_cast<size_t>(thread_count));
        for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    for (int i = 0; i < n; ++i) {
        if (failures[static_cast<size_t>(i)]) {
            try {
                std::rethrow_exception(failures[static_cast<size_t>(i)]);
            } catch (const std::exception& e) {
                throw GenerationError("generation failed for " + session.ref().key() +
                                      " request " + std::to_string(i) + ": " + e.what());
            }
        }
    }

    CandidatePool pool;
    pool.session = session.ref();
    for (int i = 0; i < n; ++i) {
        const std::optional<ParsedOutput>& output = parsed[static_cast<size_t>(i)];
        if (!output.has_value()) {
            std::cerr << "generate: dropping " << session.ref().key() << " request " << i
                      << " (unparseable after " << config.max_attempts << " attempts)\n";
            pool.dropped_requests.push_back(i);
            continue;
        }
        pool.candidates.push_back(make_candidate(
            output->rewrite, output->pseudo_response, static_cast<int>(pool.candidates.size()),
            config.request_seed_base + i, config.standalone_cap));
    }
    if (pool.candidates.empty())
        throw GenerationError("no usable candidates for " + session.ref().key() + ": all " +
                              std::to_string(n) + " outputs failed or were unparseable");
    return pool;
}

} // namespace bon
