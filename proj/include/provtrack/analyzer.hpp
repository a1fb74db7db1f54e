#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "provtrack/dom.hpp"
#include "provtrack/label.hpp"
#include "provtrack/session_log.hpp"

namespace provtrack {

enum class ChainMode : std::uint8_t { full_chain, extension_only };

// injected: the chain is rooted at an extension (content created during
// extension execution). modified: a publisher-rooted node an extension
// touched afterwards.
enum class ProvenanceKind : std::uint8_t { injected, modified };

inline std::string_view to_string(ChainMode m) {
  return m == ChainMode::full_chain ? "full" : "extension";
}
inline std::string_view to_string(ProvenanceKind k) {
  return k == ProvenanceKind::injected ? "injected" : "modified";
}

struct SuspiciousRoot {
  NodeId node;
  std::vector<Label> extensions;  // labels this node is the topmost carrier of
  LabelSet chain;
  ChainMode mode_applied = ChainMode::extension_only;
  ProvenanceKind kind = ProvenanceKind::injected;
};

struct IndicatorConfig {
  std::string border_color = "red";
  bool enabled = true;
};

// For each extension label x, the nodes carrying x with no ancestor carrying
// x, merged per node, in document order.
inline std::vector<SuspiciousRoot> find_suspicious_roots(
    const DomTree& tree, ChainMode mode = ChainMode::extension_only) {
  std::vector<SuspiciousRoot> roots;
  // Extension labels carried by some ancestor, with multiplicity.
  std::vector<std::uint32_t> above;
  struct Item {
    NodeId id;
    bool exit;
    std::size_t pushed;
  };
  std::vector<Item> stack{{tree.root(), false, 0}};
  while (!stack.empty()) {
    auto item = stack.back();
    stack.pop_back();
    if (item.exit) {
      above.resize(above.size() - item.pushed);
      continue;
    }
    const auto& n = tree.node(item.id);
    std::vector<Label> fresh;
    std::size_t pushed = 0;
    for (const auto& l : n.provenance) {
      if (!l.is_extension()) continue;
      if (std::find(above.begin(), above.end(), l.index()) == above.end()) fresh.push_back(l);
      above.push_back(l.index());
      ++pushed;
    }
    if (!fresh.empty()) {
      const auto kind = n.provenance.front().is_extension() ? ProvenanceKind::injected
                                                             : ProvenanceKind::modified;
      roots.push_back(SuspiciousRoot{n.id, std::move(fresh), n.provenance, mode, kind});
    }
    if (pushed > 0) stack.push_back({item.id, true, pushed});
    for (auto c = n.children.rbegin(); c != n.children.rend(); ++c) {
      stack.push_back({*c, false, 0});
    }
  }
  return roots;
}

inline std::string describe_chain(const LabelSet& ls) {
  std::string out;
  for (const auto& l : ls) {
    if (!out.empty()) out += " → ";
    out += l.principal().describe();
  }
  return out;
}

// full_chain: every principal, root first. extension_only: the first
// extension in the chain (the whole chain if there is none).
inline std::string summarize_chain(const LabelSet& ls, ChainMode mode) {
  if (mode == ChainMode::extension_only) {
    for (const auto& l : ls) {
      if (l.is_extension()) return l.principal().describe();
    }
  }
  return describe_chain(ls);
}

inline std::string border_declaration(std::string_view color) {
  return "border: 3px solid " + std::string(color);
}

// Style and title for each element root: an outline and its chain summary.
inline AttributeOverlay annotation_overlay(const DomTree& tree, const std::vector<SuspiciousRoot>& roots,
                                           const IndicatorConfig& cfg, ChainMode mode) {
  AttributeOverlay overlay;
  if (!cfg.enabled) return overlay;
  const auto border = border_declaration(cfg.border_color);
  for (const auto& r : roots) {
    if (!tree.contains(r.node)) continue;
    const auto& n = tree.node(r.node);
    if (!n.is_element()) continue;
    std::string style = n.attribute("style") ? *n.attribute("style") : std::string();
    while (!style.empty() && (style.back() == ' ' || style.back() == ';')) style.pop_back();
    if (!style.ends_with(border)) {
      style = style.empty() ? border : style + "; " + border;
    }
    overlay[r.node] = {{"style", std::move(style)}, {"title", summarize_chain(r.chain, mode)}};
  }
  return overlay;
}

// Copy of tree with the annotation applied. Provenance, structure and other
// attributes are untouched.
inline DomTree annotate(const DomTree& tree, const std::vector<SuspiciousRoot>& roots,
                        const IndicatorConfig& cfg, ChainMode mode) {
  DomTree out = tree;
  out.set_attach_observer({});
  for (auto& [id, attrs] : annotation_overlay(tree, roots, cfg, mode)) {
    for (auto& [k, v] : attrs) out.set_presentation_attribute(id, k, std::move(v));
  }
  return out;
}

// serialize(annotate(...)) without copying the tree.
inline std::string serialize_annotated(const DomTree& tree, const std::vector<SuspiciousRoot>& roots,
                                       const IndicatorConfig& cfg, ChainMode mode) {
  return serialize(tree, annotation_overlay(tree, roots, cfg, mode));
}

struct ReportRoot {
  NodeId node;
  std::string path;
  std::string tag;
  ProvenanceKind kind = ProvenanceKind::injected;
  std::vector<std::string> extensions;  // extension ids
  std::vector<std::string> chain;       // principal descriptions, root first
  std::string summary_full;
  std::string summary_extension;
  ChainMode mode = ChainMode::extension_only;
};

struct ReportRemoval {
  NodeId node;
  std::string path;
  std::string tag;
  std::vector<std::string> actor;
};

struct ProvenanceReport {
  std::string page_url;
  std::vector<ReportRoot> roots;
  std::vector<ReportRemoval> removals;
  std::vector<ScriptErrorRecord> script_errors;
};

inline std::vector<std::string> chain_descriptions(const LabelSet& ls) {
  std::vector<std::string> out;
  for (const auto& l : ls) out.push_back(l.principal().describe());
  return out;
}

inline ProvenanceReport emit_report(std::string page_url, const DomTree& tree,
                                    const std::vector<SuspiciousRoot>& roots,
                                    const SessionLog& log) {
  ProvenanceReport report;
  report.page_url = std::move(page_url);
  for (const auto& r : roots) {
    const auto& n = tree.node(r.node);
    ReportRoot entry;
    entry.node = r.node;
    entry.path = node_path(tree, r.node);
    entry.tag = n.is_text() ? "#text" : n.tag;
    entry.kind = r.kind;
    for (const auto& l : r.extensions) entry.extensions.push_back(l.principal().identity());
    entry.chain = chain_descriptions(r.chain);
    entry.summary_full = summarize_chain(r.chain, ChainMode::full_chain);
    entry.summary_extension = summarize_chain(r.chain, ChainMode::extension_only);
    entry.mode = r.mode_applied;
    report.roots.push_back(std::move(entry));
  }
  for (const auto& rm : log.removals) {
    report.removals.push_back({rm.node, rm.path, rm.tag, chain_descriptions(rm.actor)});
  }
  report.script_errors = log.script_errors;
  return report;
}

inline nlohmann::ordered_json to_json(const ProvenanceReport& r) {
  nlohmann::ordered_json j;
  j["page_url"] = r.page_url;
  j["roots"] = nlohmann::ordered_json::array();
  for (const auto& root : r.roots) {
    nlohmann::ordered_json e;
    e["node_id"] = root.node.value;
    e["path"] = root.path;
    e["tag"] = root.tag;
    e["kind"] = to_string(root.kind);
    e["extensions"] = root.extensions;
    e["chain"] = root.chain;
    e["summary_full"] = root.summary_full;
    e["summary_extension"] = root.summary_extension;
    e["mode_applied"] = to_string(root.mode);
    j["roots"].push_back(std::move(e));
  }
  j["removals"] = nlohmann::ordered_json::array();
  for (const auto& rm : r.removals) {
    j["removals"].push_back({{"node_id", rm.node.value},
                             {"path", rm.path},
                             {"tag", rm.tag},
                             {"actor", rm.actor}});
  }
  j["script_errors"] = nlohmann::ordered_json::array();
  for (const auto& err : r.script_errors) {
    nlohmann::ordered_json e;
    e["script"] = err.script;
    e["op_index"] = err.op_index ? nlohmann::ordered_json(*err.op_index) : nlohmann::ordered_json();
    e["message"] = err.message;
    j["script_errors"].push_back(std::move(e));
  }
  return j;
}

}  // namespace provtrack
