#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <thread>

#include "mmner/evidence.hpp"
#include "test_support.hpp"

namespace mmner {
namespace {

using testing::fixture;
using testing::TempDir;
namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

// Small index: "paris" lists five images and two docs.
void build_index(const fs::path& dir) {
  for (int i = 0; i < 5; ++i) write_text(dir / ("img" + std::to_string(i) + ".pgm"), "P5\n1 1\n255\n" + std::string(1, char('a' + i)));
  write_text(dir / "d0.txt", "eiffel tower");
  write_text(dir / "d1.txt", "seine river");
  write_text(dir / "manifest.json",
             R"({"Paris": {"images": ["img0.pgm", "img1.pgm", "img2.pgm", "img3.pgm", "img4.pgm"],
                           "docs": ["d0.txt", "d1.txt"]},
                 "rome": {"docs": ["d1.txt"]}})");
}

EvidenceRecord record(const std::string& term, std::vector<std::string> payloads, const std::string& stamp = "2026-01-01T00:00:00Z") {
  return {term, EvidenceKind::Docs, std::move(payloads), stamp, "test"};
}

class CountingClient : public RetrievalClient {
 public:
  EvidenceRecord fetch(const Query& q) override {
    ++calls;
    return {q.term, q.kind, {"payload for " + q.term}, "2026-02-02T00:00:00Z", "counting"};
  }
  int calls = 0;
};

TEST(FixtureFetch, TruncatesInManifestOrder) {
  TempDir dir;
  build_index(dir.path());
  const auto r = fixture_fetch(dir.path(), make_query("paris", EvidenceKind::Images, 3));
  ASSERT_EQ(r.payloads.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.payloads[i].back(), char('a' + i));
  EXPECT_EQ(r.term, "paris");
  EXPECT_EQ(r.source, "fixture");
  EXPECT_EQ(fixture_fetch(dir.path(), make_query("  PARIS ", EvidenceKind::Docs, 10)).payloads,
            (std::vector<std::string>{"eiffel tower", "seine river"}));
  EXPECT_TRUE(fixture_fetch(dir.path(), make_query("rome", EvidenceKind::Images, 3)).payloads.empty());
}

TEST(FixtureFetch, UnknownTermIsEmpty) {
  TempDir dir;
  build_index(dir.path());
  const auto r = fixture_fetch(dir.path(), make_query("atlantis", EvidenceKind::Images, 3));
  EXPECT_TRUE(r.payloads.empty());
  EXPECT_EQ(r.term, "atlantis");
}

TEST(FixtureFetch, MissingFileIsCorruptIndex) {
  TempDir dir;
  build_index(dir.path());
  fs::remove(dir / "img1.pgm");
  try {
    fixture_fetch(dir.path(), make_query("paris", EvidenceKind::Images, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptIndex);
    EXPECT_NE(std::string(e.what()).find("img1.pgm"), std::string::npos);
  }
  // Truncation stops before the missing file.
  EXPECT_EQ(fixture_fetch(dir.path(), make_query("paris", EvidenceKind::Images, 1)).payloads.size(), 1u);
}

TEST(FixtureFetch, UnreadableManifestIsCorruptIndex) {
  TempDir dir;
  write_text(dir / "manifest.json", "{not json");
  EXPECT_THROW(FixtureClient{dir.path()}, Error);
  TempDir empty;
  try {
    FixtureClient client(empty.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptIndex);
  }
}

TEST(Query, NormalizationAndValidation) {
  EXPECT_EQ(normalize_term("  New York\t"), "new york");
  EXPECT_EQ(normalize_term("ÉCOLE"), "école");
  for (const std::string t : {"  Paris ", "ÀB c", "x", "\tMiXeD\n"}) {
    EXPECT_EQ(normalize_term(normalize_term(t)), normalize_term(t));
  }
  EXPECT_THROW(make_query("   ", EvidenceKind::Docs, 1), Error);
  EXPECT_THROW(make_query("a", EvidenceKind::Docs, 0), Error);
}

TEST(Cache, GetAfterPutAndMiss) {
  TempDir dir;
  CacheStore store(dir.path());
  EXPECT_FALSE(cache_get(store, "paris", EvidenceKind::Docs));
  const auto r = record("paris", {std::string("bin\0ary", 7), "two"});
  cache_put(store, r);
  const auto got = cache_get(store, "paris", EvidenceKind::Docs);
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, r);
  EXPECT_EQ(got->payloads[0].size(), 7u);
  EXPECT_FALSE(cache_get(store, "paris", EvidenceKind::Images));
}

TEST(Cache, LastWriteWins) {
  TempDir dir;
  CacheStore store(dir.path());
  cache_put(store, record("paris", {"first"}));
  cache_put(store, record("paris", {"second"}, "2026-03-03T00:00:00Z"));
  EXPECT_EQ(cache_get(store, "paris", EvidenceKind::Docs)->payloads, std::vector<std::string>{"second"});
  EXPECT_EQ(store.log_entries(), 2u);
}

TEST(Cache, ReopenGivesIdenticalRecords) {
  TempDir dir;
  const auto a = record("paris", {"p1", "p2"});
  const auto b = record("rome", {"r1"});
  EvidenceRecord c{"paris", EvidenceKind::Images, {"P5\n1 1\n255\nx"}, "2026-01-02T00:00:00Z", "test"};
  {
    CacheStore store(dir.path());
    cache_put(store, a);
    cache_put(store, b);
    cache_put(store, c);
  }
  CacheStore reopened(dir.path());
  EXPECT_EQ(*cache_get(reopened, "paris", EvidenceKind::Docs), a);
  EXPECT_EQ(*cache_get(reopened, "rome", EvidenceKind::Docs), b);
  EXPECT_EQ(*cache_get(reopened, "paris", EvidenceKind::Images), c);
  EXPECT_EQ(reopened.log_entries(), 3u);
}

TEST(Cache, SharedPayloadIsStoredOnce) {
  TempDir dir;
  CacheStore store(dir.path());
  cache_put(store, record("paris", {"same bytes"}));
  cache_put(store, record("rome", {"same bytes"}));
  EXPECT_EQ(store.blob_count(), 1u);
  EXPECT_EQ(store.log_entries(), 2u);
  const auto hash = sha256_hex("same bytes");
  EXPECT_EQ(store.entries().at({"paris", EvidenceKind::Docs}).blobs, std::vector<std::string>{hash});
  EXPECT_EQ(store.entries().at({"rome", EvidenceKind::Docs}).blobs, std::vector<std::string>{hash});
  EXPECT_TRUE(fs::exists(dir / ("blobs/" + hash)));
}

TEST(Cache, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cache, EmptyPayloadIsRejected) {
  TempDir dir;
  CacheStore store(dir.path());
  try {
    cache_put(store, record("paris", {"ok", ""}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvariantViolation);
  }
  EXPECT_FALSE(cache_get(store, "paris", EvidenceKind::Docs));
  EXPECT_EQ(store.log_entries(), 0u);
}

TEST(Cache, TornFinalLineIsDroppedOtherDamageIsNot) {
  TempDir dir;
  {
    CacheStore store(dir.path());
    cache_put(store, record("paris", {"p"}));
  }
  {
    std::ofstream(dir / "log.jsonl", std::ios::app) << R"({"term": "rome", "ki)";
  }
  CacheStore reopened(dir.path());
  EXPECT_TRUE(cache_get(reopened, "paris", EvidenceKind::Docs));
  EXPECT_FALSE(cache_get(reopened, "rome", EvidenceKind::Docs));

  TempDir bad;
  write_text(bad / "log.jsonl", "garbage\n{\"also\": 1}\n");
  try {
    CacheStore store(bad.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StoreUnreadable);
  }
}

TEST(Cache, MissingBlobIsStoreUnreadable) {
  TempDir dir;
  CacheStore store(dir.path());
  cache_put(store, record("paris", {"p"}));
  fs::remove(dir / ("blobs/" + sha256_hex("p")));
  try {
    cache_get(store, "paris", EvidenceKind::Docs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StoreUnreadable);
  }
}

TEST(Cache, ClearEmptiesStore) {
  TempDir dir;
  CacheStore store(dir.path());
  cache_put(store, record("paris", {"p"}));
  store.clear();
  EXPECT_FALSE(cache_get(store, "paris", EvidenceKind::Docs));
  EXPECT_EQ(store.blob_count(), 0u);
  EXPECT_FALSE(cache_get(CacheStore(dir.path()), "paris", EvidenceKind::Docs));
}

TEST(CachedFetch, HitsNeverCallTheClient) {
  TempDir dir;
  CacheStore store(dir.path());
  CountingClient client;
  const auto q = make_query("paris", EvidenceKind::Docs, 5);
  const auto first = cached_fetch(client, store, q);
  const auto second = cached_fetch(client, store, q);
  EXPECT_EQ(client.calls, 1);
  EXPECT_EQ(first, second);

  CacheStore reopened(dir.path());
  EXPECT_EQ(cached_fetch(client, reopened, q), first);
  EXPECT_EQ(client.calls, 1);
}

TEST(CachedFetch, StaleRecordIsReturned) {
  TempDir dir;
  CacheStore store(dir.path());
  const auto stale = record("paris", {"old news"}, "2001-01-01T00:00:00Z");
  cache_put(store, stale);
  CountingClient client;
  EXPECT_EQ(cached_fetch(client, store, make_query("paris", EvidenceKind::Docs, 5)), stale);
  EXPECT_EQ(client.calls, 0);
}

TEST(CachedFetch, MatchesFixtureFetchColdAndWarm) {
  TempDir dir;
  FixtureClient client(fixture("index"));
  const auto terms = client.terms();
  ASSERT_GE(terms.size(), 40u);
  for (int pass = 0; pass < 2; ++pass) {
    CacheStore store(dir.path());  // second pass: warm, replayed from disk
    for (const auto& term : terms) {
      for (auto kind : {EvidenceKind::Docs, EvidenceKind::Images}) {
        const auto q = make_query(term, kind, 3);
        EXPECT_EQ(cached_fetch(client, store, q), fixture_fetch(fixture("index"), q)) << term;
      }
    }
  }
}

TEST(CachedFetch, RecordsAreTruncatedToRequestedK) {
  TempDir dir;
  CacheStore store(dir.path());
  cache_put(store, record("paris", {"a", "b", "c"}));
  CountingClient client;
  EXPECT_EQ(cached_fetch(client, store, make_query("paris", EvidenceKind::Docs, 2)).payloads.size(), 2u);
}

TEST(Cache, ConcurrentWritersProduceValidLog) {
  TempDir dir;
  { CacheStore init(dir.path()); }
  constexpr int kWriters = 3, kPuts = 20;
  std::vector<pid_t> children;
  for (int w = 0; w < kWriters; ++w) {
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
      int status = 0;
      try {
        CacheStore store(dir.path());
        for (int i = 0; i < kPuts; ++i) {
          store.put(record("w" + std::to_string(w) + "-" + std::to_string(i), {"shared", "own" + std::to_string(i)}));
        }
      } catch (...) {
        status = 1;
      }
      ::_exit(status);
    }
    children.push_back(pid);
  }
  // Threads in this process race against the forked writers.
  CacheStore store(dir.path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 2; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kPuts; ++i) store.put(record("t" + std::to_string(t) + "-" + std::to_string(i), {"shared"}));
    });
  }
  for (auto& th : threads) th.join();
  for (pid_t pid : children) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
  }
  CacheStore reopened(dir.path());
  EXPECT_EQ(reopened.log_entries(), static_cast<size_t>((kWriters + 2) * kPuts));
  EXPECT_EQ(reopened.entries().size(), static_cast<size_t>((kWriters + 2) * kPuts));
  EXPECT_EQ(reopened.get("w1-7", EvidenceKind::Docs)->payloads, (std::vector<std::string>{"shared", "own7"}));
}

}  // namespace
}  // namespace mmner
