#pragma once

#include <string>
#include <vector>

namespace ifr {

// Symbol inventory for labels. Class indices are 0..size-1 for the symbols in
// order, with the end-of-sequence class at index size(). Matching is
// case-insensitive; the canonical form is lowercase.
class Charset {
 public:
  // symbols: distinct characters, already canonical (lowercase). The default
  // is the 36 latin alphanumerics.
  explicit Charset(std::string symbols = "0123456789abcdefghijklmnopqrstuvwxyz");

  int size() const { return static_cast<int>(symbols_.size()); }
  int eos() const { return size(); }
  int num_classes() const { return size() + 1; }
  const std::string& symbols() const { return symbols_; }

  // Throws std::invalid_argument for characters outside the inventory.
  std::vector<int> encode(const std::string& text) const;

  // Renders class indices back to text; stops at the first EOS.
  std::string decode(const std::vector<int>& ids) const;

  char symbol(int id) const { return symbols_[id]; }
  bool contains(char c) const;
  int index_of(char c) const;  // -1 when absent

 private:
  std::string symbols_;
  int lookup_[256];
};

// Case-insensitive comparison over the alphanumeric canonical form, used for
// word accuracy.
std::string canonical_text(const std::string& s);

}  // namespace ifr
