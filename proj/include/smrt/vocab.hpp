#pragma once

// Closed whitespace-token vocabulary shared by teacher and student models.
// Reserved ids are fixed: PAD=0, BOS=1, EOS=2, UNK=3.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace smrt {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary() { add_reserved(); }

  // Deterministic ordering: frequency descending, ties lexicographic.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences) {
    std::map<std::string, std::int64_t> freq;
    for (const auto& s : sentences)
      for (const auto& t : s) ++freq[t];
    std::vector<std::pair<std::string, std::int64_t>> order(freq.begin(), freq.end());
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [tok, _] : order) v.add_token(tok);
    return v;
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  int id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || id >= size())
      throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }

  bool contains(const std::string& token) const { return ids_.count(token) != 0; }

  std::vector<int> encode(const std::vector<std::string>& toks) const {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(id(t));
    return out;
  }

  std::vector<std::string> decode(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
  }

  // FNV-1a over the ordered (id, token) mapping; changes iff the mapping does.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const std::string& s) {
      for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
      }
      h ^= '\n';
      h *= 0x100000001b3ULL;
    };
    for (const auto& t : tokens_) feed(t);
    return h;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("vocabulary: cannot write " + path);
    for (int i = kUnk + 1; i < size(); ++i) out << tokens_[i] << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("vocabulary: cannot read " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      v.add_token(line);
    }
    return v;
  }

 private:
  void add_reserved() {
    for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add_token(t);
  }

  void add_token(const std::string& t) {
    if (ids_.count(t)) throw std::invalid_argument("vocabulary: duplicate token '" + t + "'");
    ids_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Whitespace tokenization; detokenize(tokenize(t)) == t for single-space text.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string detokenize(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace smrt
