#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "provtrack/principal.hpp"

namespace provtrack {

enum class RunAt : std::uint8_t { document_start, document_end, document_idle };

inline std::string_view to_string(RunAt r) {
  switch (r) {
    case RunAt::document_start: return "document_start";
    case RunAt::document_end: return "document_end";
    case RunAt::document_idle: return "document_idle";
  }
  return "";
}

inline std::optional<RunAt> parse_run_at(std::string_view s) {
  if (s == "document_start") return RunAt::document_start;
  if (s == "document_end") return RunAt::document_end;
  if (s == "document_idle") return RunAt::document_idle;
  return std::nullopt;
}

// '*' matches any run of characters, everything else is literal.
inline bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

// Content-script match pattern: <scheme>://<host>[:<port>]<path> or
// <all_urls>. Scheme may be '*' (http or https), host may be '*' or start
// with '*.', port may be '*', path may contain '*'.
class MatchPattern {
 public:
  static std::optional<MatchPattern> parse(std::string_view text) {
    MatchPattern m;
    m.text_ = std::string(text);
    if (text == "<all_urls>") {
      m.all_urls_ = true;
      return m;
    }
    const auto sep = text.find("://");
    if (sep == std::string_view::npos || sep == 0) return std::nullopt;
    m.scheme_ = detail::to_lower(text.substr(0, sep));
    auto rest = text.substr(sep + 3);
    const auto slash = rest.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto authority = rest.substr(0, slash);
    m.path_ = std::string(rest.substr(slash));
    if (const auto colon = authority.find(':'); colon != std::string_view::npos) {
      m.port_ = std::string(authority.substr(colon + 1));
      authority = authority.substr(0, colon);
      if (m.port_->empty()) return std::nullopt;
    }
    m.host_ = detail::to_lower(authority);
    if (m.host_.empty()) return std::nullopt;
    if (m.host_ != "*") {
      std::string_view h = m.host_;
      if (h.starts_with("*.")) h.remove_prefix(2);
      if (h.empty() || h.find('*') != std::string_view::npos) return std::nullopt;
    }
    return m;
  }

  const std::string& text() const noexcept { return text_; }

  bool matches(const Url& url) const {
    if (all_urls_) return true;
    if (scheme_ == "*") {
      if (url.scheme != "http" && url.scheme != "https") return false;
    } else if (scheme_ != url.scheme) {
      return false;
    }
    if (host_ != "*") {
      if (host_.starts_with("*.")) {
        const std::string_view base = std::string_view(host_).substr(2);
        const bool exact = url.host == base;
        const bool sub = url.host.size() > base.size() &&
                         url.host.ends_with(base) &&
                         url.host[url.host.size() - base.size() - 1] == '.';
        if (!exact && !sub) return false;
      } else if (host_ != url.host) {
        return false;
      }
    }
    if (port_ && *port_ != "*") {
      const auto effective = url.port ? url.port : default_port(url.scheme);
      if (!effective || std::to_string(*effective) != *port_) return false;
    }
    return glob_match(path_, url.path);
  }

 private:
  std::string text_;
  bool all_urls_ = false;
  std::string scheme_;
  std::string host_;
  std::optional<std::string> port_;
  std::string path_;
};

struct ContentScriptEntry {
  std::vector<MatchPattern> matches;
  std::vector<std::string> script_ids;
  RunAt run_at = RunAt::document_idle;
};

struct Manifest {
  std::string extension_id;
  std::vector<ContentScriptEntry> content_scripts;
};

// An extension's label is interned lazily by the engine on first execution,
// so its index reflects first appearance in the session.
struct Extension {
  Manifest manifest;
  std::vector<std::string> background_scripts;

  const std::string& id() const noexcept { return manifest.extension_id; }
  Principal principal() const { return Principal::extension(manifest.extension_id); }
};

// Script ids to inject into page_url at the given phase, in manifest order.
inline std::vector<std::string> match_content_scripts(const Extension& ext,
                                                      std::string_view page_url,
                                                      RunAt phase) {
  const auto url = parse_url(page_url);
  if (!url) throw std::invalid_argument("malformed page url: " + std::string(page_url));
  std::vector<std::string> out;
  for (const auto& entry : ext.manifest.content_scripts) {
    if (entry.run_at != phase) continue;
    bool hit = false;
    for (const auto& m : entry.matches) {
      if (m.matches(*url)) {
        hit = true;
        break;
      }
    }
    if (hit) out.insert(out.end(), entry.script_ids.begin(), entry.script_ids.end());
  }
  return out;
}

}  // namespace provtrack
