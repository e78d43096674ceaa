#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <string>

#include "doctest.h"
#include "fmlm/rng.hpp"
#include "fmlm/tokenizer.hpp"

using namespace fmlm;

TEST_CASE("zero extra merges leaves a pure byte vocabulary") {
    BpeVocab v = train_bpe("hello world", kBpeBaseAlphabet);
    CHECK(v.size() == kBpeBaseAlphabet);
    CHECK(v.merges.empty());
    auto ids = encode(v, "hi");
    REQUIRE(ids.size() == 2);
    CHECK(ids[0] == 'h');
    CHECK(ids[1] == 'i');
}

TEST_CASE("repeated character corpus merges greedily") {
    // "aaaa": pairs (a,a) dominate; first merge is a+a -> "aa", second
    // merges the merged symbol again
    BpeVocab v = train_bpe("aaaa aaaa aaaa", kBpeBaseAlphabet + 2);
    REQUIRE(v.merges.size() == 2);
    CHECK(v.merges[0] == std::pair<std::string, std::string>{"a", "a"});
    CHECK(v.merges[1] == std::pair<std::string, std::string>{"aa", "aa"});
    auto ids = encode(v, "aaaa");
    REQUIRE(ids.size() == 1);
    CHECK(v.id_to_sym[static_cast<std::size_t>(ids[0])] == "aaaa");
}

TEST_CASE("known corpus produces a fixed merge list") {
    // "low low low lower lower": with leading spaces attached, chunks are
    // "low", " low" x2, " lower" x2. Counting adjacent pairs:
    //   (l,o) 5, (o,w) 5, ( ,l) 4, (w,e) 2, (e,r) 2
    BpeVocab v = train_bpe("low low low lower lower", kBpeBaseAlphabet + 4);
    REQUIRE(v.merges.size() == 4);
    CHECK(v.merges[0] == std::pair<std::string, std::string>{"l", "o"});
    CHECK(v.merges[1] == std::pair<std::string, std::string>{"lo", "w"});
    CHECK(v.merges[2] == std::pair<std::string, std::string>{" ", "low"});
    // remaining ties at count 2 break by first appearance; after merge 2
    // absorbed the space, the earlier pair is (" low", "e")
    CHECK(v.merges[3] == std::pair<std::string, std::string>{" low", "e"});
}

TEST_CASE("encode and decode round-trip arbitrary bytes") {
    BpeVocab v = train_bpe("the quick brown fox jumps over the lazy dog", 300);
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        std::string s;
        int len = static_cast<int>(rng.next_below(60));
        for (int i = 0; i < len; ++i)
            s.push_back(static_cast<char>(rng.next_below(256)));
        CHECK(decode(v, encode(v, s)) == s);
    }
    CHECK(decode(v, encode(v, "")) == "");
    CHECK(decode(v, encode(v, "the the the")) == "the the the");
    std::string utf8 = "caf\xc3\xa9 na\xc3\xafve \xe2\x82\xac";
    CHECK(decode(v, encode(v, utf8)) == utf8);
}

TEST_CASE("eot id decodes to nothing and is never produced by encode") {
    BpeVocab v = train_bpe("abc abc", kBpeBaseAlphabet + 1);
    auto ids = encode(v, "abc abc abc");
    for (int id : ids) CHECK(id != v.eot_id);
    CHECK(decode(v, {v.eot_id}) == "");
    CHECK(decode(v, {'x', v.eot_id, 'y'}) == "xy");
}

TEST_CASE("token spans tile the input text") {
    BpeVocab v = train_bpe("banana bandana banana", 280);
    std::string text = "a banana, and a bandana!";
    std::vector<std::pair<int, int>> spans;
    auto ids = encode_with_spans(v, text, &spans);
    REQUIRE(spans.size() == ids.size());
    int pos = 0;
    for (auto [s, e] : spans) {
        CHECK(s == pos);
        CHECK(e > s);
        pos = e;
    }
    CHECK(pos == static_cast<int>(text.size()));
}

TEST_CASE("word alignment covers every word in order") {
    BpeVocab v = train_bpe("it was a bright cold day in april", 290);
    std::string text = "  it was  a bright cold day ";
    WordAlignment a = align_words(v, text);
    REQUIRE(a.words.size() == 6);
    CHECK(a.words[0] == "it");
    CHECK(a.words[5] == "day");
    REQUIRE(a.spans.size() == 6);
    int prev_last = -1;
    for (std::size_t i = 0; i < a.spans.size(); ++i) {
        CHECK(a.spans[i].word_index == static_cast<int>(i));
        CHECK(a.spans[i].first_token > prev_last);
        CHECK(a.spans[i].last_token >= a.spans[i].first_token);
        prev_last = a.spans[i].last_token;
    }
    CHECK(decode(v, a.tokens) == text);
}

TEST_CASE("alignment property: random word soup") {
    BpeVocab v = train_bpe("red green blue alpha beta gamma delta", 300);
    Rng rng(21);
    const char* pool[] = {"red", "green", "blue", "alpha", "beta", "zzq"};
    for (int trial = 0; trial < 20; ++trial) {
        std::string text;
        int n = 1 + static_cast<int>(rng.next_below(8));
        for (int i = 0; i < n; ++i) {
            if (i) text += rng.next_below(4) == 0 ? "  " : " ";
            text += pool[rng.next_below(6)];
        }
        WordAlignment a = align_words(v, text);
        CHECK(a.words.size() == static_cast<std::size_t>(n));
        CHECK(a.spans.size() == static_cast<std::size_t>(n));
        CHECK(decode(v, a.tokens) == text);
    }
}

TEST_CASE("vocab saves and loads identically") {
    BpeVocab v = train_bpe("some text with\nnewlines\tand spaces  ", 300);
    auto prefix = (std::filesystem::temp_directory_path() / "fmlm_vocab_test").string();
    save_vocab(v, prefix);
    BpeVocab back = load_vocab(prefix);
    std::filesystem::remove(prefix + ".merges.txt");
    std::filesystem::remove(prefix + ".vocab.json");
    CHECK(back.merges == v.merges);
    CHECK(back.id_to_sym == v.id_to_sym);
    CHECK(vocab_hash(back) == vocab_hash(v));
    std::string probe = "with newlines and";
    CHECK(encode(back, probe) == encode(v, probe));
}

TEST_CASE("vocab hash distinguishes different vocabularies") {
    BpeVocab a = train_bpe("aaaa bbbb", kBpeBaseAlphabet + 2);
    BpeVocab b = train_bpe("cccc dddd", kBpeBaseAlphabet + 2);
    CHECK(vocab_hash(a) != vocab_hash(b));
}

TEST_CASE("training is deterministic") {
    std::string corpus = "peter piper picked a peck of pickled peppers";
    BpeVocab a = train_bpe(corpus, 300);
    BpeVocab b = train_bpe(corpus, 300);
    CHECK(a.merges == b.merges);
    CHECK(vocab_hash(a) == vocab_hash(b));
}

TEST_CASE("leading space attaches to the following chunk") {
    BpeVocab v = train_bpe("word word word word word word", 270);
    // " word" should become a single token after enough merges
    auto ids = encode(v, "word word");
    REQUIRE(ids.size() >= 2);
    std::string first = v.id_to_sym[static_cast<std::size_t>(ids[0])];
    CHECK(first[0] == 'w');
    bool found_space_word = false;
    for (std::size_t i = 1; i < ids.size(); ++i)
        if (v.id_to_sym[static_cast<std::size_t>(ids[i])].rfind(" ", 0) == 0)
            found_space_word = true;
    CHECK(found_space_word);
}
