#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "provtrack/extension.hpp"
#include "provtrack/html_parser.hpp"
#include "provtrack/principal.hpp"
#include "provtrack/script.hpp"

namespace provtrack {

namespace directive {

struct Onload {};
struct FireEvent {
  NodeQuery target;
  std::string event;
};
// Absolute ("to") or relative ("by") virtual time.
struct AdvanceClock {
  Millis ms = 0;
  bool relative = false;
};
struct ProgrammaticInject {
  std::string extension;
  std::string script;
};

}  // namespace directive

using Directive = std::variant<directive::Onload, directive::FireEvent,
                               directive::AdvanceClock, directive::ProgrammaticInject>;

struct Scenario {
  std::string page_url;
  std::optional<Principal> publisher;  // origin of page_url, filled in by parse_scenario
  std::string publisher_html;
  ScriptLibrary library;
  std::vector<Extension> extensions;
  std::vector<Directive> timeline;
};

struct ValidationIssue {
  std::string location;  // JSON pointer into the scenario document
  std::string message;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string source, std::vector<ValidationIssue> issues)
      : std::runtime_error(format(source, issues)), issues_(std::move(issues)) {}

  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string format(const std::string& source, const std::vector<ValidationIssue>& issues) {
    std::string out = "invalid scenario";
    if (!source.empty()) out += " " + source;
    for (const auto& i : issues) out += "\n  " + (i.location.empty() ? "/" : i.location) + ": " + i.message;
    return out;
  }

  std::vector<ValidationIssue> issues_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

inline std::string pointer_escape(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Collects every problem instead of stopping at the first.
class ScenarioReader {
 public:
  Scenario read(const json& doc) {
    Scenario s;
    if (!doc.is_object()) {
      issue("", "scenario must be a JSON object");
      return s;
    }
    for (const auto& [key, _] : doc.items()) {
      static const std::set<std::string> known = {"page_url", "publisher_html", "resources",
                                                  "scripts", "extensions", "timeline"};
      if (!known.contains(key)) issue("/" + pointer_escape(key), "unknown key");
    }
    s.page_url = string_at(doc, "", "page_url", true);
    s.publisher = origin_of(s.page_url);
    if (doc.contains("page_url") && !s.publisher) {
      issue("/page_url", "malformed url '" + s.page_url + "'");
    }
    s.publisher_html = string_at(doc, "", "publisher_html", true);
    if (doc.contains("publisher_html") && s.publisher_html.empty()) {
      issue("/publisher_html", "publisher html is empty");
    }
    read_scripts(doc, s);
    read_resources(doc, s);
    read_extensions(doc, s);
    read_timeline(doc, s);
    check_static_scripts(s);
    return s;
  }

  std::vector<ValidationIssue> issues;

 private:
  void issue(std::string where, std::string what) {
    issues.push_back({std::move(where), std::move(what)});
  }

  std::string string_at(const json& obj, const std::string& at, const char* key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) issue(at, std::string("missing '") + key + "'");
      return {};
    }
    if (!it->is_string()) {
      issue(at + "/" + key, "expected a string");
      return {};
    }
    return it->get<std::string>();
  }

  std::int64_t integer_at(const json& obj, const std::string& at, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      issue(at, std::string("missing '") + key + "'");
      return 0;
    }
    if (!it->is_number_integer()) {
      issue(at + "/" + key, "expected an integer");
      return 0;
    }
    return it->get<std::int64_t>();
  }

  NodeRef node_ref(const json& obj, const std::string& at, const char* key) {
    auto it = obj.find(key);
    const auto where = at + "/" + key;
    if (it == obj.end()) {
      issue(at, std::string("missing '") + key + "'");
      return VarRef{};
    }
    if (it->is_string()) return VarRef{it->get<std::string>()};
    if (it->is_object()) {
      if (it->contains("var")) return VarRef{string_at(*it, where, "var", true)};
      return node_query(*it, where);
    }
    issue(where, "expected a variable name or {tag, nth}");
    return VarRef{};
  }

  NodeQuery node_query(const json& obj, const std::string& at) {
    NodeQuery q;
    q.tag = detail::to_lower(string_at(obj, at, "tag", true));
    if (obj.contains("tag") && q.tag.empty()) issue(at + "/tag", "tag is empty");
    if (obj.contains("nth")) {
      const auto n = integer_at(obj, at, "nth");
      if (n < 0) issue(at + "/nth", "nth must be non-negative");
      q.nth = static_cast<std::size_t>(n < 0 ? 0 : n);
    }
    return q;
  }

  void callback_ref(const std::string& id, const std::string& where) {
    if (!script_ids_.contains(id)) issue(where, "unknown script id '" + id + "'");
  }

  ScriptOp read_op(const json& o, const std::string& at) {
    if (!o.is_object()) {
      issue(at, "op must be an object");
      return op::DocumentWrite{};
    }
    const auto name = string_at(o, at, "op", true);
    if (name == "create_element") {
      op::CreateElement c{string_at(o, at, "tag", true), string_at(o, at, "var", true)};
      if (o.contains("tag") && c.tag.empty()) issue(at + "/tag", "tag is empty");
      if (o.contains("var") && c.var.empty()) issue(at + "/var", "variable name is empty");
      return c;
    }
    if (name == "set_attribute") {
      op::SetAttribute a{node_ref(o, at, "target"), string_at(o, at, "name", true),
                         string_at(o, at, "value", true)};
      if (o.contains("name") && a.name.empty()) issue(at + "/name", "attribute name is empty");
      return a;
    }
    if (name == "set_text") return op::SetText{node_ref(o, at, "target"), string_at(o, at, "value", true)};
    if (name == "append_child") {
      return op::AppendChild{node_ref(o, at, "parent"), string_at(o, at, "child", true)};
    }
    if (name == "insert_before") {
      return op::InsertBefore{node_ref(o, at, "parent"), string_at(o, at, "child", true),
                              node_ref(o, at, "reference")};
    }
    if (name == "remove") return op::Remove{node_ref(o, at, "target")};
    if (name == "set_inner_html") {
      return op::SetInnerHtml{node_ref(o, at, "target"), string_at(o, at, "html", true)};
    }
    if (name == "document_write") return op::DocumentWrite{string_at(o, at, "html", true)};
    if (name == "add_event_listener") {
      op::AddEventListener l{node_ref(o, at, "target"), string_at(o, at, "event", true),
                             string_at(o, at, "callback", true)};
      if (o.contains("callback")) callback_ref(l.callback, at + "/callback");
      return l;
    }
    if (name == "set_timeout") {
      op::SetTimeout t{integer_at(o, at, "delay"), string_at(o, at, "callback", true)};
      if (t.delay < 0) issue(at + "/delay", "delay must be non-negative");
      if (o.contains("callback")) callback_ref(t.callback, at + "/callback");
      return t;
    }
    if (name == "set_interval") {
      op::SetInterval t{integer_at(o, at, "period"), string_at(o, at, "callback", true)};
      if (o.contains("period") && t.period <= 0) issue(at + "/period", "period must be positive");
      if (o.contains("callback")) callback_ref(t.callback, at + "/callback");
      return t;
    }
    if (name == "load_script") {
      op::LoadScript l{string_at(o, at, "url", true)};
      if (o.contains("url") && !parse_url(l.url)) issue(at + "/url", "malformed url '" + l.url + "'");
      return l;
    }
    if (name == "send_message") return op::SendMessage{string_at(o, at, "payload", false)};
    if (name == "register_on_message") {
      op::RegisterOnMessage r{string_at(o, at, "callback", true)};
      if (o.contains("callback")) callback_ref(r.callback, at + "/callback");
      return r;
    }
    if (o.contains("op")) issue(at + "/op", "unknown op '" + name + "'");
    return op::DocumentWrite{};
  }

  void read_scripts(const json& doc, Scenario& s) {
    auto it = doc.find("scripts");
    if (it == doc.end()) return;
    if (!it->is_object()) {
      issue("/scripts", "expected an object of script id to script");
      return;
    }
    // Ids first, so ops can reference scripts declared later.
    for (const auto& [id, _] : it->items()) script_ids_.insert(id);
    for (const auto& [id, body] : it->items()) {
      const auto at = "/scripts/" + pointer_escape(id);
      Script script;
      script.id = id;
      if (id.empty()) issue(at, "script id is empty");
      if (!body.is_object()) {
        issue(at, "expected an object with 'ops'");
        continue;
      }
      if (body.contains("origin")) {
        const auto origin = string_at(body, at, "origin", true);
        if (auto p = origin_of(origin)) {
          script.origin = *p;
        } else if (body["origin"].is_string()) {
          issue(at + "/origin", "malformed origin '" + origin + "'");
        }
      }
      auto ops = body.find("ops");
      if (ops == body.end() || !ops->is_array()) {
        issue(at, "missing 'ops' array");
      } else {
        for (std::size_t i = 0; i < ops->size(); ++i) {
          script.ops.push_back(read_op((*ops)[i], at + "/ops/" + std::to_string(i)));
        }
      }
      s.library.scripts.emplace(id, std::move(script));
    }
  }

  void read_resources(const json& doc, Scenario& s) {
    auto it = doc.find("resources");
    if (it == doc.end()) return;
    if (!it->is_object()) {
      issue("/resources", "expected an object of url to script id");
      return;
    }
    for (const auto& [url, id] : it->items()) {
      const auto at = "/resources/" + pointer_escape(url);
      if (!id.is_string()) {
        issue(at, "expected a script id");
        continue;
      }
      const auto sid = id.get<std::string>();
      if (!origin_of(url)) issue(at, "malformed url '" + url + "'");
      callback_ref(sid, at);
      s.library.resources.emplace(url, sid);
    }
  }

  std::vector<std::string> id_list(const json& obj, const std::string& at, const char* key) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_array()) {
      issue(at + "/" + key, "expected an array of script ids");
      return out;
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto where = at + "/" + key + "/" + std::to_string(i);
      if (!(*it)[i].is_string()) {
        issue(where, "expected a script id");
        continue;
      }
      out.push_back((*it)[i].get<std::string>());
      callback_ref(out.back(), where);
    }
    return out;
  }

  void read_extensions(const json& doc, Scenario& s) {
    auto it = doc.find("extensions");
    if (it == doc.end()) return;
    if (!it->is_array()) {
      issue("/extensions", "expected an array");
      return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto at = "/extensions/" + std::to_string(i);
      const auto& e = (*it)[i];
      if (!e.is_object()) {
        issue(at, "expected an extension object");
        continue;
      }
      Extension ext;
      ext.manifest.extension_id = string_at(e, at, "id", true);
      if (e.contains("id") && ext.manifest.extension_id.empty()) issue(at + "/id", "extension id is empty");
      if (!seen.insert(ext.manifest.extension_id).second) {
        issue(at + "/id", "duplicate extension id '" + ext.manifest.extension_id + "'");
      }
      ext.background_scripts = id_list(e, at, "background");
      if (auto cs = e.find("content_scripts"); cs != e.end()) {
        if (!cs->is_array()) {
          issue(at + "/content_scripts", "expected an array");
        } else {
          for (std::size_t j = 0; j < cs->size(); ++j) {
            ext.manifest.content_scripts.push_back(
                read_entry((*cs)[j], at + "/content_scripts/" + std::to_string(j)));
          }
        }
      }
      s.extensions.push_back(std::move(ext));
    }
  }

  ContentScriptEntry read_entry(const json& e, const std::string& at) {
    ContentScriptEntry entry;
    if (!e.is_object()) {
      issue(at, "expected a content script entry");
      return entry;
    }
    auto m = e.find("matches");
    if (m == e.end() || !m->is_array() || m->empty()) {
      issue(at, "'matches' must be a non-empty array");
    } else {
      for (std::size_t k = 0; k < m->size(); ++k) {
        const auto where = at + "/matches/" + std::to_string(k);
        const auto text = (*m)[k].is_string() ? (*m)[k].get<std::string>() : std::string();
        if (auto p = MatchPattern::parse(text)) {
          entry.matches.push_back(std::move(*p));
        } else {
          issue(where, "malformed match pattern '" + text + "'");
        }
      }
    }
    entry.script_ids = id_list(e, at, "js");
    if (e.contains("run_at")) {
      const auto text = string_at(e, at, "run_at", true);
      if (auto r = parse_run_at(text)) {
        entry.run_at = *r;
      } else {
        issue(at + "/run_at", "unknown run_at '" + text + "'");
      }
    }
    return entry;
  }

  void read_timeline(const json& doc, Scenario& s) {
    auto it = doc.find("timeline");
    if (it == doc.end()) {
      s.timeline.push_back(directive::Onload{});
      return;
    }
    if (!it->is_array()) {
      issue("/timeline", "expected an array");
      return;
    }
    std::size_t onloads = 0;
    Millis clock = 0;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto at = "/timeline/" + std::to_string(i);
      const auto& d = (*it)[i];
      if (!d.is_object()) {
        issue(at, "expected a directive object");
        continue;
      }
      const auto type = string_at(d, at, "type", true);
      if (type == "onload") {
        ++onloads;
        s.timeline.push_back(directive::Onload{});
      } else if (type == "fire_event") {
        directive::FireEvent f;
        if (auto t = d.find("target"); t != d.end() && t->is_object()) {
          f.target = node_query(*t, at + "/target");
        } else {
          issue(at, "'target' must be {tag, nth}");
        }
        f.event = string_at(d, at, "event", true);
        s.timeline.push_back(std::move(f));
      } else if (type == "advance_clock") {
        directive::AdvanceClock a;
        if (d.contains("to") == d.contains("by")) {
          issue(at, "advance_clock needs exactly one of 'to' or 'by'");
        } else if (d.contains("by")) {
          a.relative = true;
          a.ms = integer_at(d, at, "by");
          if (a.ms < 0) issue(at + "/by", "clock cannot move backwards");
          clock += a.ms;
        } else {
          a.ms = integer_at(d, at, "to");
          if (a.ms < clock) issue(at + "/to", "clock cannot move backwards");
          clock = a.ms;
        }
        s.timeline.push_back(a);
      } else if (type == "programmatic_inject") {
        directive::ProgrammaticInject p{string_at(d, at, "extension", true),
                                        string_at(d, at, "script", true)};
        if (d.contains("script")) callback_ref(p.script, at + "/script");
        pending_injects_.push_back({p.extension, at + "/extension"});
        s.timeline.push_back(std::move(p));
      } else if (d.contains("type")) {
        issue(at + "/type", "unknown directive '" + type + "'");
      }
    }
    if (onloads != 1) {
      issue("/timeline", "expected exactly one onload marker, found " + std::to_string(onloads));
    }
    std::set<std::string> ids;
    for (const auto& e : s.extensions) ids.insert(e.id());
    for (const auto& [ext, where] : pending_injects_) {
      if (!ids.contains(ext)) issue(where, "unknown extension id '" + ext + "'");
    }
  }

  void check_static_scripts(const Scenario& s) {
    if (s.publisher_html.empty()) return;
    try {
      const auto markup = parse_document_markup(s.publisher_html);
      walk_scripts(markup);
    } catch (const ParseError& e) {
      issue("/publisher_html", e.what());
    }
  }

  void walk_scripts(const MarkupNode& n) {
    if (n.kind == NodeKind::element) {
      if (auto src = script_source(n.tag, n.attribute("src"), text_content(n))) {
        if (src->first == ScriptRef::Source::inline_script) {
          callback_ref(src->second, "/publisher_html");
        } else if (!parse_url(src->second)) {
          issue("/publisher_html", "malformed script src '" + src->second + "'");
        }
      }
    }
    for (const auto& c : n.children) walk_scripts(c);
  }

  std::set<std::string> script_ids_;
  std::vector<std::pair<std::string, std::string>> pending_injects_;
};

}  // namespace detail

// Parses and fully validates a scenario document. Throws ValidationError
// listing every problem found.
inline Scenario parse_scenario(std::string_view text, const std::string& source = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(source, {{"", std::string("not valid JSON: ") + e.what()}});
  }
  detail::ScenarioReader reader;
  auto s = reader.read(doc);
  if (!reader.issues.empty()) throw ValidationError(source, std::move(reader.issues));
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("cannot write '" + path + "'");
}

inline Scenario load_scenario(const std::string& path) {
  return parse_scenario(read_file(path), path);
}

}  // namespace provtrack
