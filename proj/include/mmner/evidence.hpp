#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include "mmner/atomic_file.hpp"
#include "mmner/corpus.hpp"
#include "mmner/error.hpp"
#include "mmner/json_io.hpp"
#include "mmner/unicode.hpp"

namespace mmner {

enum class EvidenceKind { Images, Docs };

inline const char* to_string(EvidenceKind kind) { return kind == EvidenceKind::Images ? "images" : "docs"; }

inline EvidenceKind evidence_kind_from_string(const std::string& s) {
  if (s == "images") return EvidenceKind::Images;
  if (s == "docs") return EvidenceKind::Docs;
  throw Error(ErrorCode::InvariantViolation, "unknown evidence kind " + s);
}

// Lowercased with surrounding Unicode whitespace removed.
inline std::string normalize_term(std::string_view term) {
  auto cps = unicode::decode(unicode::to_lower(term));
  size_t b = 0, e = cps.size();
  while (b < e && unicode::is_space(cps[b])) ++b;
  while (e > b && unicode::is_space(cps[e - 1])) --e;
  return unicode::encode({cps.begin() + static_cast<long>(b), cps.begin() + static_cast<long>(e)});
}

struct Query {
  std::string term;
  EvidenceKind kind = EvidenceKind::Docs;
  size_t k = 10;
};

inline Query make_query(std::string_view term, EvidenceKind kind, size_t k) {
  Query q{normalize_term(term), kind, k};
  if (q.term.empty()) throw Error(ErrorCode::InvariantViolation, "query term is empty after normalization");
  if (k < 1) throw Error(ErrorCode::InvariantViolation, "query k must be >= 1");
  return q;
}

struct EvidenceRecord {
  std::string term;
  EvidenceKind kind = EvidenceKind::Docs;
  std::vector<std::string> payloads;  // raw bytes: PGM images or UTF-8 documents
  std::string retrievedAt;            // ISO-8601 UTC
  std::string source;

  bool operator==(const EvidenceRecord&) const = default;
};

inline void validate_record(const EvidenceRecord& r) {
  if (r.term.empty()) throw Error(ErrorCode::InvariantViolation, "record term is empty");
  for (const auto& p : r.payloads) {
    if (p.empty()) throw Error(ErrorCode::InvariantViolation, "empty payload for term " + r.term);
  }
}

class RetrievalClient {
 public:
  virtual ~RetrievalClient() = default;
  virtual EvidenceRecord fetch(const Query& query) = 0;
};

// Configuration contract for a web search backend. No provider ships; the
// fields exist so that a binding can be dropped in without touching callers.
struct LiveClientConfig {
  std::string urlTemplate;  // "{term}" and "{k}" are substituted
  std::string apiKeyEnv = "MMNER_EVIDENCE_API_KEY";
  double timeoutSeconds = 10.0;
  int maxRetries = 1;
};

// ---------------------------------------------------------------------------
// Fixture index: <index>/manifest.json maps term -> {images: [...], docs: [...]}
// with paths relative to the index directory.

class FixtureClient : public RetrievalClient {
 public:
  // Fixture records are timeless: the stamp is fixed so that the same index
  // always yields the same record.
  static constexpr const char* kTimestamp = "1970-01-01T00:00:00Z";

  explicit FixtureClient(std::filesystem::path indexDir) : dir_(std::move(indexDir)) {
    const auto manifestPath = dir_ / "manifest.json";
    Json manifest;
    try {
      manifest = Json::parse(read_text_file(manifestPath.string()));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::CorruptIndex, manifestPath.string() + ": " + e.what());
    }
    if (!manifest.is_object()) throw Error(ErrorCode::CorruptIndex, manifestPath.string() + ": not an object");
    for (auto it = manifest.begin(); it != manifest.end(); ++it) {
      Entry entry;
      try {
        if (it.value().contains("images")) entry.images = it.value().at("images").get<std::vector<std::string>>();
        if (it.value().contains("docs")) entry.docs = it.value().at("docs").get<std::vector<std::string>>();
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::CorruptIndex, manifestPath.string() + ": term " + it.key() + ": " + e.what());
      }
      entries_[normalize_term(it.key())] = std::move(entry);
    }
  }

  EvidenceRecord fetch(const Query& query) override {
    EvidenceRecord record{query.term, query.kind, {}, kTimestamp, "fixture"};
    auto it = entries_.find(query.term);
    if (it == entries_.end()) return record;
    const auto& paths = query.kind == EvidenceKind::Images ? it->second.images : it->second.docs;
    for (size_t i = 0; i < paths.size() && i < query.k; ++i) {
      const auto path = dir_ / paths[i];
      std::string bytes;
      try {
        bytes = read_text_file(path.string());
      } catch (const Error&) {
        throw Error(ErrorCode::CorruptIndex, "missing file " + path.string());
      }
      if (bytes.empty()) throw Error(ErrorCode::CorruptIndex, "empty file " + path.string());
      record.payloads.push_back(std::move(bytes));
    }
    return record;
  }

  std::vector<std::string> terms() const {
    std::vector<std::string> out;
    for (const auto& [t, _] : entries_) out.push_back(t);
    return out;
  }

 private:
  struct Entry {
    std::vector<std::string> images;
    std::vector<std::string> docs;
  };
  std::filesystem::path dir_;
  std::map<std::string, Entry> entries_;
};

inline EvidenceRecord fixture_fetch(const std::filesystem::path& indexDir, const Query& query) {
  return FixtureClient(indexDir).fetch(query);
}

// ---------------------------------------------------------------------------
// Cache store: append-only JSON-lines log plus content-addressed blobs.
//
//   <dir>/log.jsonl        one record per line, last write wins
//   <dir>/blobs/<sha256>   payload bytes
//   <dir>/.lock            flock()ed by writers

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

class CacheStore {
 public:
  struct LogEntry {
    std::string term;
    EvidenceKind kind = EvidenceKind::Docs;
    std::vector<std::string> blobs;
    std::string retrievedAt;
    std::string source;

    bool operator==(const LogEntry&) const = default;
  };
  using Key = std::pair<std::string, EvidenceKind>;

  explicit CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_ / "blobs", ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create cache directory " + dir_.string());
    replay();
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<EvidenceRecord> get(const std::string& term, EvidenceKind kind) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find({term, kind});
    if (it == index_.end()) return std::nullopt;
    const LogEntry& e = it->second;
    EvidenceRecord r{e.term, e.kind, {}, e.retrievedAt, e.source};
    for (const auto& hash : e.blobs) {
      const auto path = dir_ / "blobs" / hash;
      try {
        r.payloads.push_back(read_text_file(path.string()));
      } catch (const Error&) {
        throw Error(ErrorCode::StoreUnreadable, "missing blob " + path.string());
      }
    }
    return r;
  }

  void put(const EvidenceRecord& record) {
    validate_record(record);
    std::lock_guard lock(mutex_);
    WriterLock writer(dir_ / ".lock");
    LogEntry entry{record.term, record.kind, {}, record.retrievedAt, record.source};
    for (const auto& payload : record.payloads) {
      const std::string hash = sha256_hex(payload);
      const auto path = dir_ / "blobs" / hash;
      if (!std::filesystem::exists(path)) write_file_atomic(path, payload);
      entry.blobs.push_back(hash);
    }
    const std::string line = entry_to_json(entry).dump() + "\n";
    const auto logPath = dir_ / "log.jsonl";
    const int fd = ::open(logPath.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error(ErrorCode::IoFailure, "cannot open " + logPath.string());
    const ssize_t written = ::write(fd, line.data(), line.size());
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (written != static_cast<ssize_t>(line.size()) || !synced) {
      throw Error(ErrorCode::IoFailure, "short write to " + logPath.string());
    }
    index_[{entry.term, entry.kind}] = std::move(entry);
    ++logEntries_;
  }

  void clear() {
    std::lock_guard lock(mutex_);
    WriterLock writer(dir_ / ".lock");
    std::error_code ec;
    std::filesystem::remove(dir_ / "log.jsonl", ec);
    std::filesystem::remove_all(dir_ / "blobs", ec);
    std::filesystem::create_directories(dir_ / "blobs", ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot clear " + dir_.string());
    index_.clear();
    logEntries_ = 0;
  }

  const std::map<Key, LogEntry>& entries() const { return index_; }
  size_t log_entries() const { return logEntries_; }

  size_t blob_count() const {
    size_t n = 0;
    for (const auto& f : std::filesystem::directory_iterator(dir_ / "blobs")) n += f.is_regular_file() && f.path().string().find(".tmp-") == std::string::npos;
    return n;
  }

 private:
  // Exclusive advisory lock; a second writer blocks until the first is done.
  class WriterLock {
   public:
    explicit WriterLock(const std::filesystem::path& path) {
      fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
      if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
        if (fd_ >= 0) ::close(fd_);
        throw Error(ErrorCode::IoFailure, "cannot lock " + path.string());
      }
    }
    ~WriterLock() {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

   private:
    int fd_ = -1;
  };

  static Json entry_to_json(const LogEntry& e) {
    return {{"term", e.term}, {"kind", to_string(e.kind)}, {"blobs", e.blobs},
            {"retrievedAt", e.retrievedAt}, {"source", e.source}};
  }

  void replay() {
    const auto logPath = dir_ / "log.jsonl";
    if (!std::filesystem::exists(logPath)) return;
    std::string text;
    try {
      text = read_text_file(logPath.string());
    } catch (const Error& e) {
      throw Error(ErrorCode::StoreUnreadable, e.what());
    }
    size_t start = 0, lineNo = 0;
    while (start < text.size()) {
      size_t end = text.find('\n', start);
      const bool terminated = end != std::string::npos;
      if (!terminated) end = text.size();
      const std::string_view line(text.data() + start, end - start);
      ++lineNo;
      start = end + 1;
      if (line.empty()) continue;
      try {
        const Json j = Json::parse(line);
        LogEntry e{j.at("term").get<std::string>(), evidence_kind_from_string(j.at("kind").get<std::string>()),
                   j.at("blobs").get<std::vector<std::string>>(), j.at("retrievedAt").get<std::string>(),
                   j.at("source").get<std::string>()};
        index_[{e.term, e.kind}] = std::move(e);
        ++logEntries_;
      } catch (const std::exception& ex) {
        // A torn final append (crash mid-write) is dropped; damage anywhere
        // else means the log cannot be trusted.
        if (!terminated) break;
        throw Error(ErrorCode::StoreUnreadable, logPath.string() + ":" + std::to_string(lineNo) + ": " + ex.what());
      }
    }
  }

  std::filesystem::path dir_;
  std::map<Key, LogEntry> index_;
  size_t logEntries_ = 0;
  mutable std::mutex mutex_;
};

inline std::optional<EvidenceRecord> cache_get(const CacheStore& store, const std::string& term, EvidenceKind kind) {
  return store.get(normalize_term(term), kind);
}

inline void cache_put(CacheStore& store, const EvidenceRecord& record) { store.put(record); }

// Serves from the cache when possible; otherwise fetches, stores, returns.
// Records never expire.
inline EvidenceRecord cached_fetch(RetrievalClient& client, CacheStore& store, const Query& query) {
  if (auto hit = store.get(query.term, query.kind)) {
    if (hit->payloads.size() > query.k) hit->payloads.resize(query.k);
    return *hit;
  }
  EvidenceRecord record = client.fetch(query);
  store.put(record);
  return record;
}

}  // namespace mmner
