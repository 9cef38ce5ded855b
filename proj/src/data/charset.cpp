#include "ifr/data/charset.hpp"

#include <cctype>
#include <stdexcept>

namespace ifr {

Charset::Charset(std::string symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw std::invalid_argument("charset must not be empty");
  for (int i = 0; i < 256; ++i) lookup_[i] = -1;
  for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) {
    unsigned char c = static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(symbols_[i])));
    if (lookup_[c] != -1) throw std::invalid_argument(std::string("duplicate charset symbol: ") + symbols_[i]);
    lookup_[c] = i;
    symbols_[i] = static_cast<char>(c);
  }
}

bool Charset::contains(char c) const { return index_of(c) >= 0; }

int Charset::index_of(char c) const {
  return lookup_[static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(c)))];
}

std::vector<int> Charset::encode(const std::string& text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) {
    int id = index_of(c);
    if (id < 0) throw std::invalid_argument(std::string("character outside charset: '") + c + "'");
    ids.push_back(id);
  }
  return ids;
}

std::string Charset::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == eos()) break;
    if (id < 0 || id > eos()) throw std::invalid_argument("class index out of range: " + std::to_string(id));
    out.push_back(symbols_[id]);
  }
  return out;
}

std::string canonical_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

}  // namespace ifr
