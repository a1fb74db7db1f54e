#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "provtrack/dom.hpp"

namespace provtrack {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Label-free parse result. Materialization into a DomTree assigns node ids
// in preorder and labels every node with the caller's label set.
struct MarkupNode {
  NodeKind kind = NodeKind::element;
  std::string tag;
  std::vector<Attribute> attributes;
  std::string text;
  std::vector<MarkupNode> children;

  const std::string* attribute(std::string_view name) const {
    for (const auto& [k, v] : attributes) {
      if (k == name) return &v;
    }
    return nullptr;
  }
};

struct ScriptRef {
  enum class Source : std::uint8_t { inline_script, external };
  Source source;
  std::string value;  // script id for inline scripts, url for external ones
  NodeId position;
};

struct HtmlFragment {
  std::vector<NodeId> roots;  // detached subtrees, in document order
  std::vector<ScriptRef> scripts;
};

struct ParsedDocument {
  DomTree tree;
  std::vector<ScriptRef> scripts;
};

namespace detail {

inline bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool html_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}
inline bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), html_space);
}

inline bool in_list(std::string_view tag, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), tag) != list.end();
}

inline bool closes_p(std::string_view tag) {
  return in_list(tag, {"address", "article", "aside", "blockquote", "center", "details",
                       "dialog", "dir", "div", "dl", "fieldset", "figcaption", "figure",
                       "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header",
                       "hgroup", "hr", "li", "main", "menu", "nav", "ol", "p", "pre",
                       "section", "summary", "table", "ul", "dd", "dt"});
}

inline bool is_special(std::string_view tag) {
  return in_list(tag, {"address", "applet", "area", "article", "aside", "base", "blockquote",
                       "body", "br", "button", "caption", "center", "col", "colgroup", "dd",
                       "details", "dir", "div", "dl", "dt", "embed", "fieldset", "figcaption",
                       "figure", "footer", "form", "frame", "frameset", "h1", "h2", "h3",
                       "h4", "h5", "h6", "head", "header", "hr", "html", "iframe", "img",
                       "input", "li", "link", "main", "menu", "meta", "nav", "object", "ol",
                       "p", "pre", "script", "section", "select", "style", "summary",
                       "table", "tbody", "td", "template", "textarea", "tfoot", "th",
                       "thead", "title", "tr", "ul"});
}

inline bool is_scope_boundary(std::string_view tag) {
  return in_list(tag, {"html", "body", "table", "td", "th", "caption", "button", "object",
                       "marquee", "applet", "template"});
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// The five named escapes and decimal numeric references; anything else is
// kept literally.
inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += '&';
      continue;
    }
    const auto name = s.substr(i + 1, semi - i - 1);
    std::optional<std::string_view> named;
    if (name == "amp") named = "&";
    else if (name == "lt") named = "<";
    else if (name == "gt") named = ">";
    else if (name == "quot") named = "\"";
    else if (name == "apos") named = "'";
    if (named) {
      out += *named;
      i = semi;
      continue;
    }
    if (name.size() >= 2 && name[0] == '#' &&
        std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      std::uint32_t cp = 0;
      for (char c : name.substr(1)) cp = cp * 10 + static_cast<std::uint32_t>(c - '0');
      if (cp > 0 && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF)) {
        append_utf8(out, cp);
        i = semi;
        continue;
      }
    }
    out += '&';
  }
  return out;
}

class MarkupBuilder {
 public:
  explicit MarkupBuilder(std::string_view input) : in_(input) { open_.push_back(&top_); }

  std::vector<MarkupNode> run() {
    while (pos_ < in_.size()) {
      if (starts_with("<!--")) {
        skip_comment();
      } else if (in_[pos_] == '<' && pos_ + 1 < in_.size() &&
                 (in_[pos_ + 1] == '!' || in_[pos_ + 1] == '?')) {
        skip_to_tag_end();
      } else if (starts_with("</") && pos_ + 2 < in_.size() && ascii_alpha(in_[pos_ + 2])) {
        end_tag();
      } else if (in_[pos_] == '<' && pos_ + 1 < in_.size() && ascii_alpha(in_[pos_ + 1])) {
        start_tag();
      } else {
        text();
      }
    }
    return std::move(top_.children);
  }

 private:
  bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

  [[noreturn]] void truncated(std::string_view where) const {
    throw ParseError("unexpected end of input inside " + std::string(where), in_.size());
  }

  void skip_comment() {
    const auto end = in_.find("-->", pos_ + 4);
    pos_ = end == std::string_view::npos ? in_.size() : end + 3;
  }

  void skip_to_tag_end() {
    const auto end = in_.find('>', pos_);
    if (end == std::string_view::npos) truncated("markup declaration");
    pos_ = end + 1;
  }

  std::string read_name() {
    const auto start = pos_;
    while (pos_ < in_.size() && !html_space(in_[pos_]) && in_[pos_] != '>' &&
           in_[pos_] != '/' && in_[pos_] != '=') {
      ++pos_;
    }
    if (pos_ >= in_.size()) truncated("tag name");
    return to_lower(in_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < in_.size() && html_space(in_[pos_])) ++pos_;
  }

  void end_tag() {
    pos_ += 2;
    auto name = read_name();
    const auto close = in_.find('>', pos_);
    if (close == std::string_view::npos) truncated("end tag");
    pos_ = close + 1;
    for (std::size_t i = open_.size(); i-- > 1;) {
      if (open_[i]->tag == name) {
        open_.resize(i);
        return;
      }
    }
  }

  void start_tag() {
    ++pos_;
    MarkupNode node;
    node.tag = read_name();
    bool self_closing = false;
    for (;;) {
      skip_space();
      if (pos_ >= in_.size()) truncated("tag");
      if (in_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (in_[pos_] == '/') {
        ++pos_;
        if (pos_ >= in_.size()) truncated("tag");
        if (in_[pos_] == '>') {
          self_closing = true;
          ++pos_;
          break;
        }
        continue;
      }
      auto name = read_name();
      if (name.empty()) {
        ++pos_;
        continue;
      }
      std::string value;
      skip_space();
      if (pos_ >= in_.size()) truncated("tag");
      if (in_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ >= in_.size()) truncated("attribute value");
        const char q = in_[pos_];
        if (q == '"' || q == '\'') {
          const auto close = in_.find(q, pos_ + 1);
          if (close == std::string_view::npos) truncated("attribute quote");
          value = decode_entities(in_.substr(pos_ + 1, close - pos_ - 1));
          pos_ = close + 1;
        } else {
          const auto start = pos_;
          while (pos_ < in_.size() && !html_space(in_[pos_]) && in_[pos_] != '>') ++pos_;
          if (pos_ >= in_.size()) truncated("attribute value");
          value = decode_entities(in_.substr(start, pos_ - start));
        }
      }
      if (!node.attribute(name)) node.attributes.emplace_back(std::move(name), std::move(value));
    }

    implicit_close(node.tag);
    const bool raw = is_raw_text_element(node.tag) && !self_closing;
    const bool leaf = self_closing || is_void_element(node.tag);
    auto& parent = *open_.back();
    parent.children.push_back(std::move(node));
    auto* inserted = &parent.children.back();
    if (raw) {
      read_raw_text(*inserted);
    } else if (!leaf) {
      open_.push_back(inserted);
    }
  }

  void read_raw_text(MarkupNode& el) {
    const std::string closer = "</" + el.tag;
    std::size_t end = pos_;
    for (;;) {
      end = in_.find("</", end);
      if (end == std::string_view::npos) break;
      if (to_lower(in_.substr(end, closer.size())) == closer) break;
      end += 2;
    }
    const auto body_end = end == std::string_view::npos ? in_.size() : end;
    if (body_end > pos_) {
      MarkupNode t;
      t.kind = NodeKind::text;
      t.text = std::string(in_.substr(pos_, body_end - pos_));
      el.children.push_back(std::move(t));
    }
    if (end == std::string_view::npos) {
      pos_ = in_.size();
      return;
    }
    const auto close = in_.find('>', end);
    pos_ = close == std::string_view::npos ? in_.size() : close + 1;
  }

  // Pops the nearest open element satisfying `match`, unless an element
  // satisfying `stop` is found first.
  template <typename Match, typename Stop>
  void close_nearest(Match match, Stop stop) {
    for (std::size_t i = open_.size(); i-- > 1;) {
      const auto& tag = open_[i]->tag;
      if (match(tag)) {
        open_.resize(i);
        return;
      }
      if (stop(tag)) return;
    }
  }

  void implicit_close(std::string_view tag) {
    if (closes_p(tag)) {
      close_nearest([](std::string_view t) { return t == "p"; }, is_scope_boundary);
    }
    auto special_stop = [](std::string_view t) {
      return is_special(t) && t != "address" && t != "div" && t != "p";
    };
    if (tag == "li") {
      close_nearest([](std::string_view t) { return t == "li"; }, special_stop);
    } else if (tag == "dt" || tag == "dd") {
      close_nearest([](std::string_view t) { return t == "dt" || t == "dd"; }, special_stop);
    } else if (tag == "option" && open_.back()->tag == "option") {
      open_.pop_back();
    }
  }

  void text() {
    const auto start = pos_;
    ++pos_;
    while (pos_ < in_.size()) {
      if (in_[pos_] == '<' && pos_ + 1 < in_.size()) {
        const char n = in_[pos_ + 1];
        if (ascii_alpha(n) || n == '/' || n == '!' || n == '?') break;
      }
      ++pos_;
    }
    auto decoded = decode_entities(in_.substr(start, pos_ - start));
    auto& parent = *open_.back();
    if (!parent.children.empty() && parent.children.back().kind == NodeKind::text) {
      parent.children.back().text += decoded;
      return;
    }
    MarkupNode t;
    t.kind = NodeKind::text;
    t.text = std::move(decoded);
    parent.children.push_back(std::move(t));
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  MarkupNode top_;
  std::vector<MarkupNode*> open_;
};

}  // namespace detail

// Lenient parse of the supported HTML subset into label-free top-level nodes.
inline std::vector<MarkupNode> parse_markup(std::string_view html) {
  return detail::MarkupBuilder(html).run();
}

// Parses a full document and normalizes it to an html root with a body
// child. Whitespace-only text directly under the root is dropped.
inline MarkupNode parse_document_markup(std::string_view html) {
  if (html.empty()) throw ParseError("empty document", 0);
  auto top = parse_markup(html);
  std::erase_if(top, [](const MarkupNode& n) {
    return n.kind == NodeKind::text && detail::all_space(n.text);
  });

  MarkupNode root;
  if (top.size() == 1 && top.front().kind == NodeKind::element && top.front().tag == "html") {
    root = std::move(top.front());
  } else {
    root.tag = "html";
    root.children = std::move(top);
  }
  std::erase_if(root.children, [](const MarkupNode& n) {
    return n.kind == NodeKind::text && detail::all_space(n.text);
  });
  const bool has_body = std::any_of(root.children.begin(), root.children.end(), [](const auto& n) {
    return n.kind == NodeKind::element && n.tag == "body";
  });
  if (!has_body) {
    MarkupNode body;
    body.tag = "body";
    std::vector<MarkupNode> kept;
    for (auto& c : root.children) {
      if (c.kind == NodeKind::element && c.tag == "head") {
        kept.push_back(std::move(c));
      } else {
        body.children.push_back(std::move(c));
      }
    }
    kept.push_back(std::move(body));
    root.children = std::move(kept);
  }
  return root;
}

// The script a script element refers to, if any: src wins over the body.
inline std::optional<std::pair<ScriptRef::Source, std::string>> script_source(
    std::string_view tag, const std::string* src, std::string_view body) {
  if (tag != "script") return std::nullopt;
  if (src) {
    if (src->empty()) return std::nullopt;
    return std::pair{ScriptRef::Source::external, *src};
  }
  const auto first = body.find_first_not_of(" \t\r\n\f");
  if (first == std::string_view::npos) return std::nullopt;
  const auto last = body.find_last_not_of(" \t\r\n\f");
  return std::pair{ScriptRef::Source::inline_script,
                   std::string(body.substr(first, last - first + 1))};
}

inline std::string text_content(const MarkupNode& n) {
  if (n.kind == NodeKind::text) return n.text;
  std::string out;
  for (const auto& c : n.children) out += text_content(c);
  return out;
}

namespace detail {

inline NodeId materialize(DomTree& tree, const MarkupNode& m, const LabelSet& label,
                          std::vector<ScriptRef>& scripts) {
  NodeId id = m.kind == NodeKind::text ? tree.create_text(m.text, label)
                                       : tree.create_element(m.tag, label);
  for (const auto& [k, v] : m.attributes) tree.set_presentation_attribute(id, k, v);
  for (const auto& c : m.children) {
    auto child = materialize(tree, c, label, scripts);
    tree.insert_element(id, child, std::nullopt, label);
  }
  if (m.kind == NodeKind::element) {
    if (auto src = script_source(m.tag, m.attribute("src"), text_content(m))) {
      scripts.push_back(ScriptRef{src->first, std::move(src->second), id});
    }
  }
  return id;
}

}  // namespace detail

// Every node of the returned tree carries exactly `base`.
inline ParsedDocument parse_document(std::string_view html, const LabelSet& base) {
  auto markup = parse_document_markup(html);
  ParsedDocument doc{DomTree("html", base), {}};
  auto& tree = doc.tree;
  for (const auto& [k, v] : markup.attributes) {
    tree.set_presentation_attribute(tree.root(), k, v);
  }
  for (const auto& c : markup.children) {
    auto child = detail::materialize(tree, c, base, doc.scripts);
    tree.insert_element(tree.root(), child, std::nullopt, base);
  }
  return doc;
}

// Parses html into detached subtrees of `tree`, each node labeled `current`.
// The caller attaches the roots and runs the returned scripts.
inline HtmlFragment parse_fragment(DomTree& tree, std::string_view html,
                                   const LabelSet& current) {
  HtmlFragment frag;
  for (const auto& m : parse_markup(html)) {
    frag.roots.push_back(detail::materialize(tree, m, current, frag.scripts));
  }
  return frag;
}

}  // namespace provtrack
