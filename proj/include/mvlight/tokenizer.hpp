#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mvlight/common.hpp"

namespace mvlight {

// Closed caption vocabulary shared between the dataset generator and the
// diffusion model's text table. Index 0 is the null token (classifier-free
// unconditional branch), index 1 pads.
class Vocabulary {
 public:
  static constexpr int kNullId = 0;
  static constexpr int kPadId = 1;
  static constexpr int kMaxCaptionLen = 16;

  Vocabulary();  // builds the scenegen vocabulary
  explicit Vocabulary(std::vector<std::string> words);

  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  int id_of(const std::string& word) const;  // throws ArgumentError on unknown

  // Whitespace-tokenized caption -> fixed-length id sequence (padded).
  std::vector<int64_t> encode(const std::string& caption) const;
  // Null caption: [null, pad, pad, ...].
  std::vector<int64_t> null_caption() const;
  std::string decode(const std::vector<int64_t>& ids) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mvlight
