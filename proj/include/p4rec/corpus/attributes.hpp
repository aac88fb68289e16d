#pragma once

#include <string>
#include <vector>

namespace p4rec::corpus {

// Closed attribute inventory grounding every synthetic text. Attribute
// names are single lowercase tokens so the template vocabulary stays small.
struct AttributeSpace {
  std::vector<std::string> names;

  static AttributeSpace default_space();
  int size() const { return static_cast<int>(names.size()); }
  const std::string& name(int a) const { return names.at(static_cast<size_t>(a)); }
};

// Sentence templates. Every sentence makes one claim: (attribute, polarity).
// "vivid" forms carry the enthusiastic register that the appeal signal is
// planted on; plain forms state the same claim dryly.
std::string item_sentence(const AttributeSpace& attrs, int a, int sign);
std::string response_sentence(const AttributeSpace& attrs, int a, int sign, bool vivid);
std::string opener_sentence(bool excited);
std::string closer_sentence(bool excited);
std::string pref_sentence(const AttributeSpace& attrs, int a, int sign);

int count_tokens(const std::string& text);

}  // namespace p4rec::corpus
