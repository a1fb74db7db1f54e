#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "provtrack/label.hpp"

namespace provtrack {

struct NodeId {
  std::uint32_t value = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind : std::uint8_t { element, text };

using Attribute = std::pair<std::string, std::string>;
using AttributeOverlay = std::map<NodeId, std::vector<Attribute>>;

struct DomNode {
  NodeId id;
  NodeKind kind = NodeKind::element;
  std::string tag;                     // element only, lowercase
  std::vector<Attribute> attributes;   // element only, insertion order
  std::string text;                    // text only
  LabelSet provenance;
  std::vector<NodeId> children;
  std::optional<NodeId> parent;

  bool is_element() const noexcept { return kind == NodeKind::element; }
  bool is_text() const noexcept { return kind == NodeKind::text; }

  const std::string* attribute(std::string_view name) const {
    for (const auto& [k, v] : attributes) {
      if (k == name) return &v;
    }
    return nullptr;
  }
};

static_assert(std::is_nothrow_move_constructible_v<DomNode>);

struct SetAttribute {
  std::string name;
  std::string value;
};
struct SetText {
  std::string value;
};
using Mutation = std::variant<SetAttribute, SetText>;

inline bool is_void_element(std::string_view tag) {
  static constexpr std::string_view kVoid[] = {
      "area", "base", "br",   "col",   "embed",  "hr",  "img",
      "input", "link", "meta", "param", "source", "track", "wbr"};
  return std::find(std::begin(kVoid), std::end(kVoid), tag) != std::end(kVoid);
}

inline bool is_raw_text_element(std::string_view tag) {
  return tag == "script" || tag == "style";
}

// Element tree in which every node carries a provenance label set. Nodes may
// exist detached (created but not yet inserted); only nodes reachable from the
// root are part of the document. Node ids are never reused.
class DomTree {
 public:
  using AttachObserver = std::function<void(const DomTree&, NodeId)>;

  explicit DomTree(std::string root_tag = "html", LabelSet provenance = {}) {
    root_ = create_element(std::move(root_tag), std::move(provenance));
  }

  NodeId root() const noexcept { return root_; }

  bool contains(NodeId id) const noexcept {
    return id.value < nodes_.size() && nodes_[id.value].has_value();
  }

  const DomNode& node(NodeId id) const {
    if (!contains(id)) throw StructuralError("unknown node " + std::to_string(id.value));
    return *nodes_[id.value];
  }

  // Number of live nodes, attached or not.
  std::size_t size() const noexcept { return live_; }
  // Total ids handed out so far; the next id allocated equals this value.
  std::uint32_t ids_allocated() const noexcept {
    return static_cast<std::uint32_t>(nodes_.size());
  }

  bool is_connected(NodeId id) const {
    std::optional<NodeId> cur = id;
    while (cur) {
      if (*cur == root_) return true;
      cur = node(*cur).parent;
    }
    return false;
  }

  void set_attach_observer(AttachObserver obs) { observer_ = std::move(obs); }

  NodeId create_element(std::string tag, LabelSet provenance) {
    auto& n = adopt(NodeKind::element);
    n.tag = std::move(tag);
    n.provenance = std::move(provenance);
    return n.id;
  }

  NodeId create_text(std::string text, LabelSet provenance) {
    auto& n = adopt(NodeKind::text);
    n.text = std::move(text);
    n.provenance = std::move(provenance);
    return n.id;
  }

  // Attaches a detached node under parent, at the end or before `before`.
  // The node's label set becomes exactly `current`.
  void insert_element(NodeId parent, NodeId node_id, std::optional<NodeId> before,
                      const LabelSet& current) {
    auto& p = mut(parent);
    auto& n = mut(node_id);
    if (!p.is_element()) throw StructuralError("cannot insert under a text node");
    if (n.parent || node_id == root_) {
      throw StructuralError("node " + std::to_string(node_id.value) + " is already attached");
    }
    for (std::optional<NodeId> cur = parent; cur; cur = node(*cur).parent) {
      if (*cur == node_id) throw StructuralError("insertion would create a cycle");
    }
    auto pos = p.children.end();
    if (before) {
      pos = std::find(p.children.begin(), p.children.end(), *before);
      if (pos == p.children.end()) {
        throw StructuralError("reference node " + std::to_string(before->value) +
                              " is not a child of " + std::to_string(parent.value));
      }
    }
    p.children.insert(pos, node_id);
    n.parent = parent;
    if (!(n.provenance == current)) n.provenance = current;
    if (observer_ && is_connected(parent)) observer_(*this, node_id);
  }

  // Applies m to target and merges `current` into the target's label set.
  // Setting text on an element replaces its text children with one new text
  // node labeled `current`.
  void modify_element(NodeId target, const Mutation& m, const LabelSet& current) {
    auto& n = mut(target);
    if (const auto* attr = std::get_if<SetAttribute>(&m)) {
      if (attr->name.empty()) throw StructuralError("attribute name is empty");
      if (!n.is_element()) throw StructuralError("cannot set attribute on a text node");
      set_attr(n, attr->name, attr->value);
    } else {
      const auto& value = std::get<SetText>(m).value;
      if (n.is_text()) {
        n.text = value;
      } else {
        for (auto c : n.children) {
          if (node(c).is_element()) {
            throw StructuralError("set_text on <" + n.tag + "> which has element children");
          }
        }
        auto old = std::move(n.children);
        n.children.clear();
        for (auto c : old) drop_subtree(c);
        if (!value.empty()) {
          auto t = create_text(value, current);
          // `n` may have been invalidated by the allocation above.
          auto& parent = mut(target);
          parent.children.push_back(t);
          mut(t).parent = target;
          if (observer_ && is_connected(target)) observer_(*this, t);
        }
      }
    }
    auto& after = mut(target);
    for (const auto& l : current) after.provenance.add(l);
  }

  void remove_element(NodeId target) {
    if (target == root_) throw StructuralError("cannot remove the document root");
    auto& n = mut(target);
    if (n.parent) {
      auto& siblings = mut(*n.parent).children;
      siblings.erase(std::find(siblings.begin(), siblings.end(), target));
    }
    drop_subtree(target);
  }

  // Attribute write that leaves provenance untouched; used for presentation
  // annotations only.
  void set_presentation_attribute(NodeId target, std::string_view name,
                                  std::string value) {
    set_attr(mut(target), name, std::move(value));
  }

  // Document-order walk of the subtree rooted at `from`.
  template <typename F>
  void for_each_preorder(NodeId from, F&& visit) const {
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
      auto id = stack.back();
      stack.pop_back();
      const auto& n = node(id);
      visit(n);
      for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
        stack.push_back(*it);
      }
    }
  }

  template <typename F>
  void for_each_preorder(F&& visit) const {
    for_each_preorder(root_, std::forward<F>(visit));
  }

  // First body child of the root, if any.
  std::optional<NodeId> body() const {
    for (auto c : node(root_).children) {
      const auto& n = node(c);
      if (n.is_element() && n.tag == "body") return c;
    }
    return std::nullopt;
  }

 private:
  DomNode& adopt(NodeKind kind) {
    auto& n = nodes_.emplace_back(std::in_place).value();
    n.id = NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
    n.kind = kind;
    ++live_;
    return n;
  }

  DomNode& mut(NodeId id) {
    if (!contains(id)) throw StructuralError("unknown node " + std::to_string(id.value));
    return *nodes_[id.value];
  }

  static void set_attr(DomNode& n, std::string_view name, std::string value) {
    for (auto& [k, v] : n.attributes) {
      if (k == name) {
        v = std::move(value);
        return;
      }
    }
    n.attributes.emplace_back(std::string(name), std::move(value));
  }

  void drop_subtree(NodeId id) {
    std::vector<NodeId> stack{id};
    while (!stack.empty()) {
      auto cur = stack.back();
      stack.pop_back();
      for (auto c : nodes_[cur.value]->children) stack.push_back(c);
      nodes_[cur.value].reset();
      --live_;
    }
  }

  std::vector<std::optional<DomNode>> nodes_;
  NodeId root_;
  std::size_t live_ = 0;
  AttachObserver observer_;
};

inline void escape_text(std::string& out, std::string_view s, bool attribute) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out += c;
    }
  }
}

namespace detail {

inline void put_attribute(std::string& out, std::string_view k, std::string_view v) {
  out += ' ';
  out += k;
  out += "=\"";
  escape_text(out, v, true);
  out += '"';
}

inline void start_tag(std::string& out, const DomNode& n, const std::vector<Attribute>* extra) {
  out += '<';
  out += n.tag;
  if (!extra) {
    for (const auto& [k, v] : n.attributes) put_attribute(out, k, v);
  } else {
    for (const auto& [k, v] : n.attributes) {
      auto o = std::find_if(extra->begin(), extra->end(), [&](const Attribute& a) { return a.first == k; });
      put_attribute(out, k, o == extra->end() ? v : o->second);
    }
    for (const auto& [k, v] : *extra) {
      if (!n.attribute(k)) put_attribute(out, k, v);
    }
  }
  out += '>';
}

// A start tag of the plain output, out[begin, end), and its overlaid form.
struct Splice {
  std::size_t begin;
  std::size_t end;
  std::string tag;
};

inline void serialize_node(const DomTree& tree, NodeId id, std::string& out, bool raw_text,
                           const AttributeOverlay* overlay, std::vector<Splice>* splices) {
  const auto& n = tree.node(id);
  if (n.is_text()) {
    if (raw_text) {
      out += n.text;
    } else {
      escape_text(out, n.text, false);
    }
    return;
  }
  const std::vector<Attribute>* extra = nullptr;
  if (overlay && !overlay->empty()) {
    if (auto it = overlay->find(id); it != overlay->end()) extra = &it->second;
  }
  if (extra && splices) {
    Splice sp{out.size(), 0, {}};
    start_tag(out, n, nullptr);
    sp.end = out.size();
    start_tag(sp.tag, n, extra);
    splices->push_back(std::move(sp));
  } else {
    start_tag(out, n, extra);
  }
  if (is_void_element(n.tag)) return;
  const bool raw = is_raw_text_element(n.tag);
  for (auto c : n.children) serialize_node(tree, c, out, raw, overlay, splices);
  out += "</";
  out += n.tag;
  out += '>';
}

}  // namespace detail

// Deterministic HTML for the connected part of the tree: attributes in
// insertion order, no added whitespace.
inline std::string serialize(const DomTree& tree) {
  std::string out;
  detail::serialize_node(tree, tree.root(), out, false, nullptr, nullptr);
  return out;
}

// As above, with the overlay's attributes replacing or following those of the
// nodes it names.
inline std::string serialize(const DomTree& tree, const AttributeOverlay& overlay) {
  std::string out;
  detail::serialize_node(tree, tree.root(), out, false, &overlay, nullptr);
  return out;
}

// serialize(tree) and serialize(tree, overlay) from a single walk.
inline std::pair<std::string, std::string> serialize_both(const DomTree& tree,
                                                          const AttributeOverlay& overlay) {
  std::string plain;
  std::vector<detail::Splice> splices;
  detail::serialize_node(tree, tree.root(), plain, false, &overlay, &splices);
  std::string overlaid;
  std::size_t grow = 0;
  for (const auto& sp : splices) grow += sp.tag.size();
  overlaid.reserve(plain.size() + grow);
  std::size_t at = 0;
  for (const auto& sp : splices) {
    overlaid.append(plain, at, sp.begin - at);
    overlaid += sp.tag;
    at = sp.end;
  }
  overlaid.append(plain, at);
  return {std::move(plain), std::move(overlaid)};
}

inline std::string serialize(const DomTree& tree, NodeId subtree) {
  std::string out;
  detail::serialize_node(tree, subtree, out, false, nullptr, nullptr);
  return out;
}

// Location of a node as tag+ordinal steps from the root, e.g.
// html[0]/body[0]/div[2]. Text nodes use the step name "#text".
inline std::string node_path(const DomTree& tree, NodeId id) {
  std::vector<std::string> steps;
  for (std::optional<NodeId> cur = id; cur; cur = tree.node(*cur).parent) {
    const auto& n = tree.node(*cur);
    const std::string name = n.is_text() ? "#text" : n.tag;
    std::size_t ordinal = 0;
    if (n.parent) {
      for (auto sib : tree.node(*n.parent).children) {
        if (sib == *cur) break;
        const auto& s = tree.node(sib);
        if ((s.is_text() ? "#text" : s.tag) == name) ++ordinal;
      }
    }
    steps.push_back(name + "[" + std::to_string(ordinal) + "]");
  }
  std::string out;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (!out.empty()) out += '/';
    out += *it;
  }
  return out;
}

}  // namespace provtrack

template <>
struct std::hash<provtrack::NodeId> {
  std::size_t operator()(const provtrack::NodeId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
