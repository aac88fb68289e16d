#include "p4rec/corpus/attributes.hpp"

#include <stdexcept>

#include "p4rec/rewards/encoder.hpp"

namespace p4rec::corpus {

AttributeSpace AttributeSpace::default_space() {
  AttributeSpace s;
  s.names = {"dark",      "striking", "fast",     "heartwarming", "suspenseful", "funny",
             "romantic",  "cerebral", "explosive", "wholesome",    "gritty",      "whimsical",
             "epic",      "intimate", "nostalgic", "daring"};
  return s;
}

std::string item_sentence(const AttributeSpace& attrs, int a, int sign) {
  const std::string& adj = attrs.name(a);
  if (sign >= 0) return "it is " + adj + " from start to finish .";
  return "it is never " + adj + " at any point .";
}

std::string response_sentence(const AttributeSpace& attrs, int a, int sign, bool vivid) {
  if (!vivid) return item_sentence(attrs, a, sign);
  const std::string& adj = attrs.name(a);
  if (sign >= 0) return "its " + adj + " spirit will thrill you completely .";
  return "you will be glad it is never " + adj + " .";
}

std::string opener_sentence(bool excited) {
  return excited ? "you are going to love this one ." : "here is the short summary .";
}

std::string closer_sentence(bool excited) {
  return excited ? "do not miss it tonight ." : "that is the whole picture .";
}

std::string pref_sentence(const AttributeSpace& attrs, int a, int sign) {
  const std::string& adj = attrs.name(a);
  if (sign >= 0) return "they enjoy movies that are " + adj + " .";
  return "they avoid movies that are " + adj + " .";
}

int count_tokens(const std::string& text) {
  return static_cast<int>(rewards::tokenize(text).size());
}

}  // namespace p4rec::corpus
