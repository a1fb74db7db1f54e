#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "provtrack/principal.hpp"

namespace provtrack {

using Millis = std::int64_t;

// Document-order lookup: the nth connected element with the given tag.
struct NodeQuery {
  std::string tag;
  std::size_t nth = 0;
};

// A node held in a script-local variable.
struct VarRef {
  std::string name;
};

using NodeRef = std::variant<VarRef, NodeQuery>;

namespace op {

struct CreateElement { std::string tag; std::string var; };
struct SetAttribute { NodeRef target; std::string name; std::string value; };
struct SetText { NodeRef target; std::string value; };
struct AppendChild { NodeRef parent; std::string child; };
struct InsertBefore { NodeRef parent; std::string child; NodeRef reference; };
struct Remove { NodeRef target; };
struct SetInnerHtml { NodeRef target; std::string html; };
struct DocumentWrite { std::string html; };
struct AddEventListener { NodeRef target; std::string event; std::string callback; };
struct SetTimeout { Millis delay = 0; std::string callback; };
struct SetInterval { Millis period = 0; std::string callback; };
struct LoadScript { std::string url; };
struct SendMessage { std::string payload; };
struct RegisterOnMessage { std::string callback; };

}  // namespace op

using ScriptOp =
    std::variant<op::CreateElement, op::SetAttribute, op::SetText, op::AppendChild,
                 op::InsertBefore, op::Remove, op::SetInnerHtml, op::DocumentWrite,
                 op::AddEventListener, op::SetTimeout, op::SetInterval, op::LoadScript,
                 op::SendMessage, op::RegisterOnMessage>;

// Snake-case names used in scenario files, indexed like ScriptOp.
inline constexpr std::string_view kOpNames[] = {
    "create_element", "set_attribute",      "set_text",    "append_child",
    "insert_before",  "remove",             "set_inner_html", "document_write",
    "add_event_listener", "set_timeout",    "set_interval", "load_script",
    "send_message",   "register_on_message"};
static_assert(std::size(kOpNames) == std::variant_size_v<ScriptOp>);

inline std::string_view op_name(const ScriptOp& op) { return kOpNames[op.index()]; }

// Ops that touch the page DOM and are therefore unavailable to background
// scripts.
inline bool touches_dom(const ScriptOp& op) {
  return std::holds_alternative<op::CreateElement>(op) ||
         std::holds_alternative<op::SetAttribute>(op) ||
         std::holds_alternative<op::SetText>(op) ||
         std::holds_alternative<op::AppendChild>(op) ||
         std::holds_alternative<op::InsertBefore>(op) ||
         std::holds_alternative<op::Remove>(op) ||
         std::holds_alternative<op::SetInnerHtml>(op) ||
         std::holds_alternative<op::DocumentWrite>(op) ||
         std::holds_alternative<op::AddEventListener>(op);
}

struct Script {
  std::string id;
  // Declared origin; scripts loaded by URL default to the URL's origin.
  std::optional<Principal> origin;
  std::vector<ScriptOp> ops;
};

// Scenario-local stand-in for the network: url -> script id, plus the table
// of every script body.
struct ScriptLibrary {
  std::map<std::string, Script, std::less<>> scripts;
  std::map<std::string, std::string, std::less<>> resources;

  const Script* find(std::string_view id) const {
    auto it = scripts.find(id);
    return it == scripts.end() ? nullptr : &it->second;
  }

  const Script* resolve_url(std::string_view url) const {
    auto it = resources.find(url);
    return it == resources.end() ? nullptr : find(it->second);
  }

  // Origin a script loaded from `url` runs as.
  static std::optional<Principal> load_origin(const Script& s, std::string_view url) {
    if (s.origin) return s.origin;
    return origin_of(url);
  }
};

}  // namespace provtrack
