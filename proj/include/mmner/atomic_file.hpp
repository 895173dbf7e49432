#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "mmner/error.hpp"

namespace mmner {

namespace fs = std::filesystem;

// Set to a non-empty value to make every staged write fail halfway through.
// Used by the failure-injection tests of the CLI.
inline constexpr const char* kInjectWriteFailureEnv = "MMNER_INJECT_WRITE_FAILURE";

// Stages output files under temporary names and renames them into place only
// on commit(). Destruction without commit removes every staged file, so a
// failed command never leaves partial outputs behind.
class OutputTransaction {
 public:
  OutputTransaction() = default;
  OutputTransaction(const OutputTransaction&) = delete;
  OutputTransaction& operator=(const OutputTransaction&) = delete;

  ~OutputTransaction() { rollback(); }

  void stage(const fs::path& target, const std::string& content) {
    if (target.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(target.parent_path(), ec);
      if (ec) throw Error(ErrorCode::IoFailure, "cannot create directory " + target.parent_path().string());
    }
    fs::path temp = target;
    temp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(staged_.size());
    staged_.emplace_back(temp, target);

    std::FILE* f = std::fopen(temp.c_str(), "wb");
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + temp.string());
    const char* inject = std::getenv(kInjectWriteFailureEnv);
    const bool fail = inject != nullptr && *inject != '\0';
    const size_t n = fail ? content.size() / 2 : content.size();
    const size_t written = std::fwrite(content.data(), 1, n, f);
    const bool flushed = std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
    std::fclose(f);
    if (fail) throw Error(ErrorCode::IoFailure, "injected write failure on " + target.string());
    if (written != n || !flushed) throw Error(ErrorCode::IoFailure, "short write to " + target.string());
  }

  void commit() {
    for (const auto& [temp, target] : staged_) {
      std::error_code ec;
      fs::rename(temp, target, ec);
      if (ec) throw Error(ErrorCode::IoFailure, "cannot rename into " + target.string() + ": " + ec.message());
    }
    staged_.clear();
  }

  void rollback() noexcept {
    for (const auto& entry : staged_) {
      std::error_code ec;
      fs::remove(entry.first, ec);
    }
    staged_.clear();
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> staged_;
};

inline void write_file_atomic(const fs::path& target, const std::string& content) {
  OutputTransaction tx;
  tx.stage(target, content);
  tx.commit();
}

}  // namespace mmner
