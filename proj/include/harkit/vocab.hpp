#pragma once

#include <map>
#include <string>
#include <vector>

namespace harkit {

struct VocabEntry {
  int id = -1;
  std::string name;
  std::string location;  // optional
};

// Ordered label set with dense ids 0..n-1. File format: one entry per line,
// id<TAB>name<TAB>optional-location.
class LabelSet {
public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  static LabelSet parse(const std::string& text);
  std::string serialize() const;

  void add(std::string name, std::string location = {});

  int id_of(const std::string& name) const;      // -1 if unknown
  int require(const std::string& name) const;    // VocabularyError if unknown
  const VocabEntry& entry(int id) const;
  const std::string& name(int id) const { return entry(id).name; }

  std::size_t size() const { return entries_.size(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }

  bool operator==(const LabelSet& other) const;

private:
  std::vector<VocabEntry> entries_;
  std::map<std::string, int> index_;
};

struct Vocabulary {
  LabelSet atomic;
  LabelSet complex;
  LabelSet sensors;  // per input channel: sensor id + body/space location
};

}  // namespace harkit
