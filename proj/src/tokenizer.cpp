#include "mvlight/tokenizer.hpp"

#include <sstream>

namespace mvlight {

namespace {

std::vector<std::string> scenegen_words() {
  return {
      "<null>", "<pad>",
      // glue
      "a", "and",
      // shapes
      "sphere", "box", "cylinder",
      // colors
      "red", "green", "blue", "yellow", "orange", "purple", "white", "gray",
      "cyan", "magenta", "brown", "black",
      // material adjectives
      "matte", "glossy", "metallic",
  };
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(scenegen_words()) {}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (int i = 0; i < static_cast<int>(words_.size()); i++) index_[words_[i]] = i;
  if (words_.size() < 2 || words_[kNullId] != "<null>" || words_[kPadId] != "<pad>")
    throw ArgumentError("vocabulary must start with <null>, <pad>");
}

int Vocabulary::id_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) throw ArgumentError("word not in vocabulary: " + word);
  return it->second;
}

std::vector<int64_t> Vocabulary::encode(const std::string& caption) const {
  std::vector<int64_t> ids;
  std::istringstream ss(caption);
  std::string w;
  while (ss >> w) {
    if (static_cast<int>(ids.size()) >= kMaxCaptionLen)
      throw ArgumentError("caption longer than " + std::to_string(kMaxCaptionLen) + " tokens");
    ids.push_back(id_of(w));
  }
  ids.resize(kMaxCaptionLen, kPadId);
  return ids;
}

std::vector<int64_t> Vocabulary::null_caption() const {
  std::vector<int64_t> ids(kMaxCaptionLen, kPadId);
  ids[0] = kNullId;
  return ids;
}

std::string Vocabulary::decode(const std::vector<int64_t>& ids) const {
  std::string out;
  for (int64_t id : ids) {
    if (id == kPadId) continue;
    if (id < 0 || id >= size()) throw ArgumentError("token id out of range");
    if (!out.empty()) out += ' ';
    out += words_[static_cast<size_t>(id)];
  }
  return out;
}

}  // namespace mvlight
