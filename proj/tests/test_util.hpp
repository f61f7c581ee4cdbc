#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "spancat/corpus.hpp"

namespace spancat::test {

// Scratch file removed when the object goes out of scope.
class TempFile {
 public:
  explicit TempFile(const std::string& contents = "", const std::string& suffix = ".tmp") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("spancat_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + suffix);
    std::ofstream(path_, std::ios::binary) << contents;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline SpanAnnotation span(int s, int e, Label l, std::string annotator = "gold") {
  return {s, e, l, std::move(annotator), {}};
}

// One sentence per inner vector.
inline Excerpt excerpt(const std::string& id, const std::vector<std::vector<std::string>>& sents,
                       std::vector<SpanAnnotation> spans = {}) {
  Excerpt e = make_excerpt(id, sents, "test");
  e.spans = std::move(spans);
  return e;
}

}  // namespace spancat::test
