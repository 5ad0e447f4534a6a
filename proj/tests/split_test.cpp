#include <gtest/gtest.h>

#include <set>

#include "parlstance/split.hpp"
#include "support/synthetic.hpp"

using namespace parlstance;

namespace {

Corpus numbered_corpus(std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i)
    c.examples.push_back(testkit::make_example("e" + std::to_string(i), "Con", "Lab", int(i % 2)));
  return c;
}

Corpus dated_corpus(const std::vector<std::pair<std::string, unsigned>>& id_month) {
  Corpus c;
  for (const auto& [id, month] : id_month) {
    auto ex = testkit::make_example(id, "Con", "Lab", 1);
    ex.date = *Date::from_ymd(2015, month, 1);
    c.examples.push_back(ex);
  }
  return c;
}

std::set<std::string> ids_in(const SplitAssignment& s, SplitPart part) {
  std::set<std::string> out;
  for (const auto& [id, p] : s.split_of)
    if (p == part) out.insert(id);
  return out;
}

void expect_partition(const Corpus& corpus, const SplitAssignment& s) {
  ASSERT_EQ(s.split_of.size(), corpus.size());
  std::set<std::string> all;
  for (const auto& [id, _] : s.split_of) EXPECT_TRUE(all.insert(id).second) << "duplicate " << id;
  std::set<std::string> expected;
  for (const auto& ex : corpus.examples) expected.insert(ex.id);
  EXPECT_EQ(all, expected);
}

}  // namespace

TEST(SplitRng, EngineMatchesStandardSequence) {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  SplitRng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(SplitRng, BoundedDrawsStayInRange) {
  SplitRng rng(3);
  for (std::uint64_t bound : {0ull, 1ull, 6ull, 1000ull})
    for (int i = 0; i < 200; ++i) EXPECT_LE(rng.uniform_inclusive(bound), bound);
}

TEST(RandomSplit, FloorSizesWithRemainderToTrain) {
  auto s = random_split(numbered_corpus(10), 123, {0.8, 0.1, 0.1});
  EXPECT_EQ(s.sizes(), (std::array<std::size_t, 3>{8, 1, 1}));
  // 33,311 * 0.1 = 3,331.1 -> 3,331 each; train takes 33,311 - 6,662.
  auto big = random_split(numbered_corpus(33311), 7, {0.8, 0.1, 0.1});
  EXPECT_EQ(big.sizes(), (std::array<std::size_t, 3>{26649, 3331, 3331}));
  auto odd = random_split(numbered_corpus(7), 1, {0.5, 0.25, 0.25});
  EXPECT_EQ(odd.sizes(), (std::array<std::size_t, 3>{5, 1, 1}));
}

TEST(RandomSplit, DeterministicPerSeed) {
  auto corpus = testkit::synthetic_corpus(11);
  auto a = random_split(corpus, 99);
  auto b = random_split(corpus, 99);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_jsonl(a), to_jsonl(b));
  EXPECT_NE(to_jsonl(a), to_jsonl(random_split(corpus, 100)));
}

TEST(RandomSplit, ArgumentErrors) {
  EXPECT_THROW(random_split(numbered_corpus(10), 1, {0.8, 0.1, 0.2}), ArgumentError);
  EXPECT_THROW(random_split(Corpus{}, 1), ArgumentError);
  EXPECT_THROW(random_split(numbered_corpus(10), 1, {1.2, -0.1, -0.1}), ArgumentError);
}

TEST(RandomSplit, PartitionPropertyOverRandomCorpora) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 100; ++trial) {
    testkit::SyntheticOptions opt;
    opt.motions = 1 + gen() % 60;
    auto corpus = testkit::synthetic_corpus(gen(), opt);
    auto seed = gen();
    auto s = random_split(corpus, seed);
    expect_partition(corpus, s);
    auto n = corpus.size();
    auto sizes = s.sizes();
    EXPECT_EQ(sizes[1], std::size_t(std::floor(n * 0.1 + 1e-9)));
    EXPECT_EQ(sizes[2], std::size_t(std::floor(n * 0.1 + 1e-9)));
    EXPECT_EQ(to_jsonl(s), to_jsonl(random_split(corpus, seed)));
  }
}

TEST(TemporalSplit, MonthsAroundCutoff) {
  auto corpus = dated_corpus({{"jan", 1}, {"feb", 2}, {"mar", 3}, {"apr", 4}});
  auto s = temporal_split(corpus, *Date::from_ymd(2015, 2, 1), 5);
  EXPECT_EQ(ids_in(s, SplitPart::train), (std::set<std::string>{"jan", "feb"}));
  auto tail = ids_in(s, SplitPart::validation);
  auto test = ids_in(s, SplitPart::test);
  tail.insert(test.begin(), test.end());
  EXPECT_EQ(tail, (std::set<std::string>{"mar", "apr"}));
  EXPECT_EQ(s.sizes()[1], 1u);
  EXPECT_EQ(s.sizes()[2], 1u);
  EXPECT_EQ(s.kind, SplitKind::temporal);
  EXPECT_EQ(s.cutoff_date, Date::from_ymd(2015, 2, 1));
}

TEST(TemporalSplit, DegenerateCutoffs) {
  auto corpus = dated_corpus({{"jan", 1}, {"feb", 2}});
  EXPECT_THROW(temporal_split(corpus, *Date::from_ymd(2014, 12, 1), 1), ArgumentError);
  EXPECT_THROW(temporal_split(corpus, *Date::from_ymd(2015, 3, 1), 1), ArgumentError);
  // Everything on or before the cutoff leaves nothing to evaluate.
  EXPECT_THROW(temporal_split(corpus, *Date::from_ymd(2015, 2, 1), 1), ArgumentError);
}

TEST(TemporalSplit, MotionSpanningCutoffIsIntegrityError) {
  auto corpus = dated_corpus({{"a", 1}, {"b", 3}});
  corpus.examples[1].motion_id = corpus.examples[0].motion_id;
  EXPECT_THROW(temporal_split(corpus, *Date::from_ymd(2015, 2, 1), 1), IntegrityError);
}

TEST(TemporalSplit, MonotonicityAndPartitionProperty) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    testkit::SyntheticOptions opt;
    opt.motions = 2 + gen() % 50;
    auto corpus = testkit::synthetic_corpus(gen(), opt);
    Date lo = corpus.examples[0].date, hi = lo;
    for (const auto& ex : corpus.examples) lo = std::min(lo, ex.date), hi = std::max(hi, ex.date);
    if (lo == hi) continue;
    // Pick an existing date strictly before the maximum as cutoff.
    Date cutoff = lo;
    for (const auto& ex : corpus.examples)
      if (ex.date < hi && gen() % 3 == 0) cutoff = std::max(cutoff, ex.date);
    auto seed = gen();
    auto s = temporal_split(corpus, cutoff, seed);
    expect_partition(corpus, s);
    auto parts = s.as_map();
    Date max_train = lo;
    std::optional<Date> min_tail;
    for (const auto& ex : corpus.examples) {
      if (parts[ex.id] == SplitPart::train)
        max_train = std::max(max_train, ex.date);
      else
        min_tail = min_tail ? std::min(*min_tail, ex.date) : ex.date;
    }
    ASSERT_TRUE(min_tail);
    EXPECT_LE(max_train, cutoff);
    EXPECT_LT(cutoff, *min_tail);
    EXPECT_EQ(s, temporal_split(corpus, cutoff, seed));
  }
}

TEST(SplitAssignment, JsonLinesRoundTrip) {
  auto corpus = testkit::synthetic_corpus(4);
  Date lo = corpus.examples[0].date;
  for (const auto& ex : corpus.examples) lo = std::min(lo, ex.date);
  auto s = temporal_split(corpus, lo, 8);
  auto body = to_jsonl(s);
  EXPECT_EQ(body.substr(0, body.find('\n')),
            R"({"id":")" + corpus.examples[0].id + R"(","split":")" +
                to_string(s.split_of[0].second) + R"("})");
  auto back = split_from_jsonl(body, split_metadata(s));
  EXPECT_EQ(back, s);
}

TEST(SplitAssignment, ReadsTrainerFixture) {
  const std::string dir = std::string(PARLSTANCE_TEST_DATA) + "/fixtures/";
  auto body = read_file(dir + "trainer_split.jsonl");
  auto meta = nlohmann::json::parse(read_file(dir + "trainer_split_meta.json"));
  auto split = split_from_jsonl(body, meta);
  EXPECT_EQ(split.kind, SplitKind::random);
  EXPECT_EQ(split.seed, 7u);
  EXPECT_FALSE(split.cutoff_date.has_value());
  EXPECT_EQ(split.sizes(), (std::array<std::size_t, 3>{2, 1, 1}));
  EXPECT_EQ(split.as_map().at("r3"), SplitPart::validation);
  EXPECT_EQ(to_jsonl(split), body);
  EXPECT_EQ(nlohmann::json(split_metadata(split)), meta);
}
