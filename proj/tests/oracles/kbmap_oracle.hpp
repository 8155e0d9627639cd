#pragma once

// Subclass-closure query answered by scanning every statement: a subject
// matches when its predicate is the classification predicate and the object
// IRI starts with the class template followed by the queried code.

#include <set>
#include <string>

namespace oracle {

template <class TripleRange>
std::set<std::string> classified_subjects(const TripleRange& triples, const std::string& predicate,
                                          const std::string& class_template, const std::string& code,
                                          bool subclasses) {
  std::set<std::string> out;
  const std::string target = class_template + code;
  for (const auto& t : triples) {
    if (t.predicate.str() != predicate) continue;
    const std::string& o = t.object.str();
    bool hit = subclasses ? o.compare(0, target.size(), target) == 0 : o == target;
    if (hit) out.insert(t.subject.str());
  }
  return out;
}

}  // namespace oracle
