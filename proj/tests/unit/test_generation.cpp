#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "bon/errors.hpp"
#include "bon/generation.hpp"
#include "bon/jsonl.hpp"
#include "testutil.hpp"

using namespace bon;

namespace {

ConversationSession session_with_turns(int history_turns) {
    ConversationSession s;
    s.session_id = "gen";
    for (int i = 0; i < history_turns; ++i)
        s.history.push_back(
            Turn{"question " + std::to_string(i + 1), "answer " + std::to_string(i + 1)});
    s.turn_index = history_turns + 1;
    s.current_query = "current question";
    return s;
}

GenerationConfig quick_config(int n) {
    GenerationConfig config;
    config.n = n;
    config.max_in_flight = 1;
    config.backoff_ms = 1;
    return config;
}

} // namespace

TEST_CASE("render_prompt keeps the template order and is deterministic") {
    PromptTemplate tmpl = PromptTemplate::builtin_default();
    ConversationSession session = session_with_turns(2);

    std::string prompt = render_prompt(tmpl, session);
    CHECK(prompt == render_prompt(tmpl, session));

    size_t instruction_pos = prompt.find(tmpl.instruction);
    size_t demo_pos = prompt.find(tmpl.demonstrations[0]);
    size_t context_pos = prompt.find("Context:");
    size_t current_pos = prompt.find("Current Question: current question");
    REQUIRE(instruction_pos != std::string::npos);
    REQUIRE(demo_pos != std::string::npos);
    REQUIRE(context_pos != std::string::npos);
    REQUIRE(current_pos != std::string::npos);
    CHECK(instruction_pos < demo_pos);
    CHECK(demo_pos < context_pos);
    CHECK(context_pos < current_pos);

    // The context block holds exactly the two history turns, in order.
    std::string context = prompt.substr(context_pos, current_pos - context_pos);
    CHECK(context.find("Question: question 1") != std::string::npos);
    CHECK(context.find("Question: question 2") != std::string::npos);
    CHECK(context.find("Question: question 1") < context.find("Question: question 2"));

    // First-turn session: context block is empty.
    ConversationSession first_turn = session_with_turns(0);
    std::string first_prompt = render_prompt(tmpl, first_turn);
    size_t ctx = first_prompt.find("Context:");
    size_t cur = first_prompt.find("Current Question:");
    REQUIRE(ctx != std::string::npos);
    CHECK(first_prompt.substr(ctx, cur - ctx).find("Question: ") == std::string::npos);
}

TEST_CASE("render_prompt rejects a session with nothing to ask") {
    PromptTemplate tmpl = PromptTemplate::builtin_default();
    ConversationSession s = session_with_turns(0);
    s.current_query = "   ";
    CHECK_THROWS_AS(render_prompt(tmpl, s), PromptError);
}

TEST_CASE("parse_output extracts the rewrite and response") {
    ParsedOutput out = parse_output(
        "Rewrite: reason. So the question should be rewritten as: Who made the dime?\n"
        "Response: John R. Sinnock.");
    REQUIRE(out.ok);
    CHECK(out.rewrite == "Who made the dime?");
    CHECK(out.pseudo_response == "John R. Sinnock.");

    ParsedOutput junk = parse_output("gibberish");
    CHECK_FALSE(junk.ok);
    CHECK(junk.raw == "gibberish");

    ParsedOutput empty_response =
        parse_output("blah rewritten as: the standalone question\nResponse:");
    REQUIRE(empty_response.ok);
    CHECK(empty_response.rewrite == "the standalone question");
    CHECK(empty_response.pseudo_response == "");

    // Case-insensitive markers.
    ParsedOutput upper = parse_output("REWRITTEN AS: q here RESPONSE: a here");
    REQUIRE(upper.ok);
    CHECK(upper.rewrite == "q here");
    CHECK(upper.pseudo_response == "a here");

    // Missing the response marker entirely.
    CHECK_FALSE(parse_output("rewritten as: q only").ok);
    // Blank rewrite segment.
    CHECK_FALSE(parse_output("rewritten as: Response: x").ok);
}

TEST_CASE("parse_output inverts format_output on well-formed pairs") {
    std::mt19937_64 rng(61);
    for (int i = 0; i < 100; ++i) {
        std::string rewrite = testutil::random_word(rng) + " " + testutil::random_word(rng);
        std::string response = testutil::random_word(rng) + " " + testutil::random_word(rng);
        ParsedOutput out = parse_output(format_output("some reason", rewrite, response));
        REQUIRE(out.ok);
        CHECK(out.rewrite == rewrite);
        CHECK(out.pseudo_response == response);
    }
}

TEST_CASE("fixture client replays stored outputs and names misses") {
    FixtureClient client;
    SessionRef ref{"gen", 1};
    client.add(ref, 0, "stored output zero");
    client.add(ref, 1, "stored output one");

    GenerationRequest request;
    request.session = ref;
    request.request_index = 1;
    CHECK(client.complete(request) == "stored output one");

    request.request_index = 5;
    try {
        client.complete(request);
        FAIL("expected NotFoundError");
    } catch (const NotFoundError& e) {
        std::string msg = e.what();
        CHECK(msg.find("gen_1") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
    }
}

TEST_CASE("fixture files round-trip") {
    FixtureClient client;
    client.add(SessionRef{"s1", 2}, 0, "raw text with\nnewline");
    client.add(SessionRef{"s1", 2}, 1, "second");

    auto dir = std::filesystem::temp_directory_path() / "bon_generation_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "fixture.jsonl";
    client.save(path);
    FixtureClient loaded = FixtureClient::load(path);
    GenerationRequest request;
    request.session = SessionRef{"s1", 2};
    request.request_index = 0;
    CHECK(loaded.complete(request) == "raw text with\nnewline");
}

TEST_CASE("generate_pool assembles candidates in request order") {
    ConversationSession session = session_with_turns(1);
    FixtureClient client;
    for (int i = 0; i < 4; ++i) {
        client.add(session.ref(), i,
                   format_output("reason", "rewrite number " + std::to_string(i),
                                 "response " + std::to_string(i)));
    }
    CandidatePool pool =
        generate_pool(client, PromptTemplate::builtin_default(), session, quick_config(4));
    REQUIRE(pool.candidates.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(pool.candidates[static_cast<size_t>(i)].candidate_index == i);
        CHECK(pool.candidates[static_cast<size_t>(i)].rewrite ==
              "rewrite number " + std::to_string(i));
        CHECK(pool.candidates[static_cast<size_t>(i)].generation_seed == i);
    }
    CHECK(pool.dropped_requests.empty());

    // Replaying the fixture yields an identical pool.
    CandidatePool again =
        generate_pool(client, PromptTemplate::builtin_default(), session, quick_config(4));
    CHECK(again.candidates == pool.candidates);
}

TEST_CASE("generate_pool drops unparseable outputs and reindexes") {
    ConversationSession session = session_with_turns(1);
    FixtureClient client;
    client.add(session.ref(), 0, format_output("r", "first good", "a"));
    client.add(session.ref(), 1, "not parseable at all");
    client.add(session.ref(), 2, format_output("r", "second good", "b"));

    GenerationConfig config = quick_config(3);
    config.max_attempts = 2;
    CandidatePool pool =
        generate_pool(client, PromptTemplate::builtin_default(), session, config);
    REQUIRE(pool.candidates.size() == 2);
    CHECK(pool.candidates[0].rewrite == "first good");
    CHECK(pool.candidates[0].candidate_index == 0);
    CHECK(pool.candidates[1].rewrite == "second good");
    CHECK(pool.candidates[1].candidate_index == 1);
    CHECK(pool.candidates[1].generation_seed == 2); // original request seed
    CHECK(pool.dropped_requests == std::vector<int>{1});
}

TEST_CASE("generate_pool errors when nothing is usable") {
    ConversationSession session = session_with_turns(0);
    FixtureClient client;
    client.add(session.ref(), 0, "junk");
    client.add(session.ref(), 1, "more junk");
    GenerationConfig config = quick_config(2);
    config.max_attempts = 1;
    CHECK_THROWS_AS(
        generate_pool(client, PromptTemplate::builtin_default(), session, config),
        GenerationError);
}

namespace {

// Fails with a transport error a fixed number of times, then succeeds.
class FlakyClient final : public GenerationClient {
public:
    explicit FlakyClient(int failures) : failures_left_(failures) {}
    std::string complete(const GenerationRequest&) override {
        if (failures_left_-- > 0) throw TransportError("synthetic outage");
        return format_output("r", "eventual rewrite", "eventual response");
    }

private:
    std::atomic<int> failures_left_;
};

} // namespace

TEST_CASE("generate_pool retries transport failures per policy") {
    ConversationSession session = session_with_turns(0);

    FlakyClient twice(2);
    GenerationConfig config = quick_config(1);
    config.max_attempts = 3;
    CandidatePool pool =
        generate_pool(twice, PromptTemplate::builtin_default(), session, config);
    REQUIRE(pool.candidates.size() == 1);
    CHECK(pool.candidates[0].rewrite == "eventual rewrite");

    FlakyClient hopeless(100);
    CHECK_THROWS_AS(
        generate_pool(hopeless, PromptTemplate::builtin_default(), session, config),
        GenerationError);
}

TEST_CASE("pools from a fixture round-trip through candidate jsonl") {
    ConversationSession session = session_with_turns(2);
    FixtureClient client;
    for (int i = 0; i < 16; ++i)
        client.add(session.ref(), i,
                   format_output("why", "standalone form " + std::to_string(i),
                                 "informative answer " + std::to_string(i)));
    GenerationConfig config = quick_config(16);
    config.max_in_flight = 4; // exercise the concurrent path
    CandidatePool pool =
        generate_pool(client, PromptTemplate::builtin_default(), session, config);
    REQUIRE(pool.candidates.size() == 16);

    auto dir = std::filesystem::temp_directory_path() / "bon_generation_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "pools16.jsonl";
    write_pools_jsonl(path, {pool});
    auto loaded = read_pools_jsonl(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].session == pool.session);
    CHECK(loaded[0].candidates == pool.candidates);
}

TEST_CASE("prompt templates load from json files") {
    auto dir = std::filesystem::temp_directory_path() / "bon_generation_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "template.json";
    std::ofstream(path) << R"({"instruction":"custom instruction",)"
                        << R"("demonstrations":["demo one","demo two"]})";
    PromptTemplate tmpl = PromptTemplate::load(path);
    CHECK(tmpl.instruction == "custom instruction");
    REQUIRE(tmpl.demonstrations.size() == 2);
    CHECK(tmpl.demonstrations[1] == "demo two");

    std::ofstream(dir / "bad.json") << "nope";
    CHECK_THROWS_AS(PromptTemplate::load(dir / "bad.json"), DataError);
}

TEST_CASE("http client speaks the chat-completions protocol with retries") {
    std::atomic<int> calls{0};
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        int call = ++calls;
        nlohmann::json body = nlohmann::json::parse(req.body);
        CHECK(body.at("model").get<std::string>() == "test-model");
        CHECK(body.at("temperature").get<double>() == doctest::Approx(0.7));
        CHECK(body.contains("seed"));
        CHECK(req.get_header_value("Authorization") == "Bearer sekrit");
        if (call <= 2) { // two transient failures, then success
            res.status = 503;
            return;
        }
        nlohmann::json reply = {
            {"choices",
             {{{"message",
                {{"content", format_output("served reason", "served rewrite " +
                                                                body.at("seed").dump(),
                                           "served response")}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpClient client("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions",
                      "sekrit", "test-model");
    ConversationSession session = session_with_turns(0);
    GenerationConfig config = quick_config(1);
    config.max_attempts = 3;
    config.request_seed_base = 40;
    CandidatePool pool =
        generate_pool(client, PromptTemplate::builtin_default(), session, config);
    REQUIRE(pool.candidates.size() == 1);
    CHECK(pool.candidates[0].rewrite == "served rewrite 40");
    CHECK(calls == 3);

    server.stop();
    server_thread.join();
}
