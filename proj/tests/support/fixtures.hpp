#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "provtrack/provtrack.hpp"

namespace fixtures {

// The principals of the running example: publisher, two script origins, an
// extension, and an ad server.
struct Universe {
  provtrack::PrincipalRegistry reg;
  provtrack::Label l0 = reg.intern(provtrack::Principal::network("https", "example.com"));
  provtrack::Label l1 = reg.intern(provtrack::Principal::network("https", "o1.example"));
  provtrack::Label l2 = reg.intern(provtrack::Principal::network("https", "o2.example"));
  provtrack::Label l3 = reg.intern(provtrack::Principal::extension("ext-abc"));
  provtrack::Label l4 = reg.intern(provtrack::Principal::network("https", "ads.example"));
};

inline std::vector<std::uint32_t> indices(const provtrack::LabelSet& ls) {
  std::vector<std::uint32_t> out;
  for (const auto& l : ls) out.push_back(l.index());
  return out;
}

// Order-preserving union over plain index sequences.
inline std::vector<std::uint32_t> ordered_union(std::vector<std::uint32_t> a,
                                                const std::vector<std::uint32_t>& b) {
  for (auto x : b) {
    if (std::find(a.begin(), a.end(), x) == a.end()) a.push_back(x);
  }
  return a;
}

inline std::string source_path(const std::string& rel) {
  return std::string(PROVTRACK_SOURCE_DIR) + "/" + rel;
}

}  // namespace fixtures

namespace fixtures {

inline provtrack::SessionResult run_json(const std::string& text, provtrack::SessionOptions opts = {}) {
  return provtrack::run_session(provtrack::parse_scenario(text), opts);
}

// nth connected element with the tag, in document order.
inline const provtrack::DomNode& find(const provtrack::DomTree& t, const std::string& tag,
                                      std::size_t nth = 0) {
  const provtrack::DomNode* hit = nullptr;
  std::size_t seen = 0;
  t.for_each_preorder([&](const provtrack::DomNode& n) {
    if (!hit && n.is_element() && n.tag == tag && seen++ == nth) hit = &n;
  });
  if (!hit) throw std::runtime_error("no <" + tag + "> #" + std::to_string(nth));
  return *hit;
}

inline std::vector<std::string> chain(const provtrack::LabelSet& ls) {
  std::vector<std::string> out;
  for (const auto& l : ls) out.push_back(l.principal().describe());
  return out;
}

inline std::vector<std::string> chain_of(const provtrack::SessionResult& r, const std::string& tag,
                                         std::size_t nth = 0) {
  return chain(find(r.final_tree, tag, nth).provenance);
}

}  // namespace fixtures

namespace fixtures {

inline std::string read_scenario(const std::string& name) {
  return provtrack::read_file(source_path("scenarios/" + name + ".scenario"));
}

}  // namespace fixtures
