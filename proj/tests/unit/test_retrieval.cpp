#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bon/dense.hpp"
#include "bon/errors.hpp"
#include "bon/sparse.hpp"
#include "testutil.hpp"

using namespace bon;

namespace {

std::vector<Passage> toy_corpus() {
    return {{"d1", "a a b"}, {"d2", "b c"}};
}

} // namespace

TEST_CASE("build_sparse_index computes corpus statistics") {
    std::vector<Passage> one_word = {{"p1", "x"}, {"p2", "y"}, {"p3", "z"}};
    SparseIndex idx = SparseIndex::build(one_word);
    CHECK(idx.doc_count() == 3);
    CHECK(idx.avg_doc_length() == doctest::Approx(1.0));

    SparseIndex toy = SparseIndex::build(toy_corpus());
    CHECK(toy.avg_doc_length() == doctest::Approx(2.5));
    auto b_postings = toy.postings("b");
    REQUIRE(b_postings.size() == 2);
    CHECK(b_postings[0] == std::pair<std::string, int>{"d1", 1});
    CHECK(b_postings[1] == std::pair<std::string, int>{"d2", 1});
    auto a_postings = toy.postings("a");
    REQUIRE(a_postings.size() == 1);
    CHECK(a_postings[0] == std::pair<std::string, int>{"d1", 2});
}

TEST_CASE("empty corpus indexes but cannot be searched") {
    SparseIndex idx = SparseIndex::build(std::vector<Passage>{});
    CHECK(idx.doc_count() == 0);
    CHECK_THROWS_AS(idx.search("a", 10), Error);
}

TEST_CASE("duplicate passage ids are rejected by name") {
    std::vector<Passage> dup = {{"p1", "a"}, {"p1", "b"}};
    try {
        SparseIndex::build(dup);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("p1") != std::string::npos);
    }
}

TEST_CASE("bm25 score matches the hand-computed value") {
    std::vector<Passage> corpus = {{"d1", "a"}, {"d2", "b"}};
    SparseIndex idx = SparseIndex::build(corpus, Bm25Params{0.9, 0.4});
    std::vector<std::string> query = {"a"};
    // idf = ln(1 + 1.5/1.5) = ln 2; tf term = 1*(k1+1)/(1 + k1*1) = 1.
    CHECK(idx.score(query, "d1") == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(idx.score(query, "d1") == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK(idx.score(query, "d2") == 0.0);
    CHECK_THROWS_AS(idx.score(query, "dX"), NotFoundError);
}

TEST_CASE("bm25 gives identical passages identical scores") {
    std::vector<Passage> corpus = {{"d1", "red fish blue"}, {"d2", "red fish blue"}};
    SparseIndex idx = SparseIndex::build(corpus);
    std::vector<std::string> query = {"red", "blue"};
    CHECK(idx.score(query, "d1") == idx.score(query, "d2"));
}

TEST_CASE("bm25 term absent from every document contributes zero") {
    SparseIndex idx = SparseIndex::build(toy_corpus());
    std::vector<std::string> query = {"zebra"};
    CHECK(idx.score(query, "d1") == 0.0);
    CHECK(idx.score(query, "d2") == 0.0);
    CHECK(idx.search("zebra", 10).entries.empty());
}

TEST_CASE("bm25 is monotone in term frequency at fixed document length") {
    std::vector<Passage> corpus = {{"d1", "a x x"}, {"d2", "a a x"}, {"d3", "a a a"}};
    SparseIndex idx = SparseIndex::build(corpus);
    std::vector<std::string> query = {"a"};
    CHECK(idx.score(query, "d1") < idx.score(query, "d2"));
    CHECK(idx.score(query, "d2") < idx.score(query, "d3"));
}

TEST_CASE("search_sparse basics") {
    std::vector<Passage> single = {{"only", "hello world"}};
    SparseIndex idx = SparseIndex::build(single);
    RetrievalResult r = idx.search("hello", 10);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].passage_id == "only");

    // Identical docs tie; ascending id breaks the tie.
    std::vector<Passage> twins = {{"zz", "same text"}, {"aa", "same text"}};
    SparseIndex twin_idx = SparseIndex::build(twins);
    RetrievalResult tied = twin_idx.search("same", 10);
    REQUIRE(tied.entries.size() == 2);
    CHECK(tied.entries[0].passage_id == "aa");
    CHECK(tied.entries[1].passage_id == "zz");
}

TEST_CASE("search_sparse equals brute-force scoring on a 5-doc corpus") {
    std::vector<Passage> corpus = {{"p1", "a b c"},
                                   {"p2", "a a b"},
                                   {"p3", "c d e"},
                                   {"p4", "b b b a"},
                                   {"p5", "a"}};
    SparseIndex idx = SparseIndex::build(corpus);
    RetrievalResult got = idx.search("a b", 3);
    auto want = testutil::naive_sparse_ranking(corpus, "a b", 3, 0.9, 0.4);
    REQUIRE(got.entries.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
        CHECK(got.entries[i].passage_id == want[i].first);
        CHECK(got.entries[i].score == doctest::Approx(want[i].second).epsilon(1e-12));
    }
}

TEST_CASE("search_sparse equals the brute-force oracle on random corpora") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        int docs = testutil::uniform_int(rng, 1, 60);
        std::vector<Passage> corpus;
        for (int d = 0; d < docs; ++d) {
            std::string text;
            int len = testutil::uniform_int(rng, 1, 12);
            for (int t = 0; t < len; ++t) text += testutil::random_word(rng, 6) + " ";
            corpus.push_back(Passage{"p" + std::to_string(d), text});
        }
        SparseIndex idx = SparseIndex::build(corpus);
        for (int q = 0; q < 5; ++q) {
            std::string query = testutil::random_word(rng, 6) + " " + testutil::random_word(rng, 6);
            int depth = testutil::uniform_int(rng, 1, 20);
            RetrievalResult got = idx.search(query, depth);
            auto want = testutil::naive_sparse_ranking(corpus, query, depth, 0.9, 0.4);
            REQUIRE(got.entries.size() == want.size());
            for (size_t i = 0; i < want.size(); ++i) {
                CHECK(got.entries[i].passage_id == want[i].first);
                CHECK(got.entries[i].score == doctest::Approx(want[i].second).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("sparse index round-trips through its file format") {
    SparseIndex idx = SparseIndex::build(toy_corpus(), Bm25Params{0.82, 0.68});
    auto dir = std::filesystem::temp_directory_path() / "bon_retrieval_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "index.json";
    idx.save(path);
    SparseIndex loaded = SparseIndex::load(path);
    CHECK(loaded.doc_count() == idx.doc_count());
    CHECK(loaded.avg_doc_length() == idx.avg_doc_length());
    CHECK(loaded.params().k1 == idx.params().k1);
    RetrievalResult a = idx.search("a b c", 10);
    RetrievalResult b = loaded.search("a b c", 10);
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].passage_id == b.entries[i].passage_id);
        CHECK(a.entries[i].score == b.entries[i].score);
    }

    std::ofstream corrupt(dir / "corrupt.json");
    corrupt << "{not json\n";
    corrupt.close();
    CHECK_THROWS_AS(SparseIndex::load(dir / "corrupt.json"), DataError);
}

TEST_CASE("dense search retrieves an exact stored vector first") {
    // Orthogonal one-hot vectors.
    std::vector<std::string> ids = {"v1", "v2", "v3"};
    std::vector<float> data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    DenseIndex idx = DenseIndex::from_vectors(ids, data, 3);
    std::vector<float> query = {1, 0, 0};
    RetrievalResult r = idx.search(query, 2);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].passage_id == "v1");
    CHECK(r.entries[0].score == doctest::Approx(1.0));
}

TEST_CASE("dense zero query yields all-zero scores ordered by id") {
    std::vector<std::string> ids = {"pc", "pa", "pb"};
    std::vector<float> data = {1, 2, 3, 4, 5, 6};
    DenseIndex idx = DenseIndex::from_vectors(ids, data, 2);
    std::vector<float> query = {0, 0};
    RetrievalResult r = idx.search(query, 10);
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].passage_id == "pa");
    CHECK(r.entries[1].passage_id == "pb");
    CHECK(r.entries[2].passage_id == "pc");
    for (const ScoredPassage& e : r.entries) CHECK(e.score == 0.0);
}

TEST_CASE("dense search matches brute force on random vectors") {
    std::mt19937_64 rng(99);
    const int dim = 8;
    std::vector<std::string> ids;
    std::vector<float> data;
    for (int i = 0; i < 20; ++i) {
        ids.push_back("p" + std::to_string(i));
        for (int d = 0; d < dim; ++d)
            data.push_back(static_cast<float>(testutil::uniform01(rng) * 2.0 - 1.0));
    }
    DenseIndex idx = DenseIndex::from_vectors(ids, data, dim);
    for (int q = 0; q < 10; ++q) {
        std::vector<float> query;
        for (int d = 0; d < dim; ++d)
            query.push_back(static_cast<float>(testutil::uniform01(rng) * 2.0 - 1.0));
        RetrievalResult got = idx.search(query, 20);
        auto want = testutil::naive_dense_ranking(ids, data, dim, query, 20);
        REQUIRE(got.entries.size() == want.size());
        for (size_t i = 0; i < want.size(); ++i) {
            CHECK(got.entries[i].passage_id == want[i].first);
            CHECK(got.entries[i].score == doctest::Approx(want[i].second).epsilon(1e-12));
        }
    }
}

TEST_CASE("dense ordering is invariant to positive rescaling") {
    std::mt19937_64 rng(5);
    const int dim = 6;
    std::vector<std::string> ids;
    std::vector<float> data;
    for (int i = 0; i < 15; ++i) {
        ids.push_back("p" + std::to_string(i));
        for (int d = 0; d < dim; ++d)
            data.push_back(static_cast<float>(testutil::uniform01(rng)));
    }
    std::vector<float> query;
    for (int d = 0; d < dim; ++d) query.push_back(static_cast<float>(testutil::uniform01(rng)));

    DenseIndex idx = DenseIndex::from_vectors(ids, data, dim);
    std::vector<float> scaled_data = data;
    for (float& x : scaled_data) x *= 4.0f;
    std::vector<float> scaled_query = query;
    for (float& x : scaled_query) x *= 4.0f;
    DenseIndex scaled_idx = DenseIndex::from_vectors(ids, scaled_data, dim);

    RetrievalResult a = idx.search(query, 15);
    RetrievalResult b = scaled_idx.search(scaled_query, 15);
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i)
        CHECK(a.entries[i].passage_id == b.entries[i].passage_id);
}

TEST_CASE("dense index rejects bad inputs and mismatched queries") {
    std::vector<float> nan_data = {1.0f, std::nanf("")};
    CHECK_THROWS_AS(DenseIndex::from_vectors({"a"}, nan_data, 2), DataError);
    CHECK_THROWS_AS(DenseIndex::from_vectors({"a", "a"}, {1, 2}, 1), DataError);

    DenseIndex idx = DenseIndex::from_vectors({"a"}, {1, 2, 3}, 3);
    std::vector<float> query = {1, 2};
    try {
        idx.search(query, 5);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("2") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
}

TEST_CASE("dense index round-trips through the vector file") {
    std::mt19937_64 rng(31);
    std::vector<std::string> ids = {"px", "py"};
    std::vector<float> data;
    for (int i = 0; i < 8; ++i) data.push_back(static_cast<float>(testutil::uniform01(rng)));
    DenseIndex idx = DenseIndex::from_vectors(ids, data, 4);

    auto dir = std::filesystem::temp_directory_path() / "bon_retrieval_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "vectors.bin";
    idx.save(path);
    DenseIndex loaded = DenseIndex::load(path);
    CHECK(loaded.dimension() == 4);
    REQUIRE(loaded.size() == 2);
    for (const std::string& id : ids) {
        auto a = idx.vector(id);
        auto b = loaded.vector(id);
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }

    // Truncated payload is reported.
    auto truncated = dir / "short.bin";
    std::filesystem::copy_file(path, truncated,
                               std::filesystem::copy_options::overwrite_existing);
    std::filesystem::resize_file(truncated, std::filesystem::file_size(truncated) - 5);
    CHECK_THROWS_AS(DenseIndex::load(truncated), DataError);
}

TEST_CASE("gold_rank is 1 exactly when the top entry is gold") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        GoldLabel gold;
        gold.session = SessionRef{"s", 1};
        int gold_count = testutil::uniform_int(rng, 1, 3);
        for (int g = 0; g < gold_count; ++g)
            gold.gold_passage_ids.insert("p" + std::to_string(testutil::uniform_int(rng, 0, 9)));

        RetrievalResult result;
        result.depth = 10;
        int len = testutil::uniform_int(rng, 1, 8);
        for (int i = 0; i < len; ++i)
            result.entries.push_back(ScoredPassage{
                "p" + std::to_string(testutil::uniform_int(rng, 0, 9)),
                static_cast<double>(len - i)});

        bool first_is_gold = gold.gold_passage_ids.count(result.entries[0].passage_id) > 0;
        CHECK((gold_rank(result, gold) == Rank{1}) == first_is_gold);
    }
}

TEST_CASE("gold_rank finds the first gold hit") {
    GoldLabel gold;
    gold.session = SessionRef{"s", 1};
    gold.gold_passage_ids = {"g1", "g2"};

    RetrievalResult r;
    r.depth = 10;
    r.entries = {{"g1", 3.0}, {"x", 2.0}};
    CHECK(gold_rank(r, gold) == Rank{1});

    r.entries = {{"x", 3.0}, {"y", 2.0}};
    CHECK(gold_rank(r, gold) == Rank{});

    r.entries = {{"a", 9}, {"b", 8}, {"g2", 7}, {"c", 6}, {"d", 5}, {"e", 4}, {"g1", 3}};
    CHECK(gold_rank(r, gold) == Rank{3});
}

TEST_CASE("passage files load from tsv and jsonl") {
    auto dir = std::filesystem::temp_directory_path() / "bon_retrieval_test";
    std::filesystem::create_directories(dir);

    auto tsv = dir / "p.tsv";
    std::ofstream(tsv) << "p1\thello world\np2\tsecond text\n";
    auto from_tsv = read_passages(tsv);
    REQUIRE(from_tsv.size() == 2);
    CHECK(from_tsv[0].passage_id == "p1");
    CHECK(from_tsv[1].text == "second text");

    auto jsonl = dir / "p.jsonl";
    write_passages_jsonl(jsonl, from_tsv);
    auto from_jsonl = read_passages(jsonl);
    REQUIRE(from_jsonl.size() == 2);
    CHECK(from_jsonl[0].passage_id == from_tsv[0].passage_id);
    CHECK(from_jsonl[1].text == from_tsv[1].text);

    std::ofstream(tsv, std::ios::app) << "p1\tdup\n";
    CHECK_THROWS_AS(read_passages(tsv), DataError);
}
