#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace provtrack {

enum class PrincipalKind : std::uint8_t { network, extension };

// A source of content: a network origin (scheme, host, port) or an extension
// identified by an opaque, case-sensitive id. Extensions never carry a port.
class Principal {
 public:
  static Principal network(std::string scheme, std::string host,
                           std::optional<std::uint16_t> port = std::nullopt);
  static Principal extension(std::string id);

  PrincipalKind kind() const noexcept { return kind_; }
  bool is_extension() const noexcept { return kind_ == PrincipalKind::extension; }
  // "extension" for extensions, otherwise the lowercase network scheme.
  const std::string& scheme() const noexcept { return scheme_; }
  const std::string& identity() const noexcept { return identity_; }
  std::optional<std::uint16_t> port() const noexcept { return port_; }

  // https://example.com, http://h:8080, extension:ext-abc
  std::string describe() const;

  friend auto operator<=>(const Principal&, const Principal&) = default;
  friend bool operator==(const Principal&, const Principal&) = default;

 private:
  Principal(PrincipalKind k, std::string s, std::string id,
            std::optional<std::uint16_t> p)
      : kind_(k), scheme_(std::move(s)), identity_(std::move(id)), port_(p) {}

  PrincipalKind kind_;
  std::string scheme_;
  std::string identity_;
  std::optional<std::uint16_t> port_;
};

inline std::optional<std::uint16_t> default_port(std::string_view scheme) {
  if (scheme == "http" || scheme == "ws") return 80;
  if (scheme == "https" || scheme == "wss") return 443;
  return std::nullopt;
}

struct Url {
  std::string scheme;  // lowercase
  std::string host;    // lowercase
  std::optional<std::uint16_t> port;  // explicit port only
  std::string path;    // starts with '/', includes any query
};

namespace detail {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline bool is_scheme_char(char c, bool first) {
  const bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (first) return alpha;
  return alpha || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

inline bool is_host_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_';
}

}  // namespace detail

// Parses an absolute hierarchical URL of the form scheme://host[:port][/path].
// Returns nullopt for anything else.
inline std::optional<Url> parse_url(std::string_view text) {
  const auto sep = text.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  for (std::size_t i = 0; i < sep; ++i) {
    if (!detail::is_scheme_char(text[i], i == 0)) return std::nullopt;
  }
  Url url;
  url.scheme = detail::to_lower(text.substr(0, sep));
  if (url.scheme == "extension") return std::nullopt;

  auto rest = text.substr(sep + 3);
  const auto path_start = rest.find_first_of("/?#");
  auto authority = rest.substr(0, path_start);
  if (path_start == std::string_view::npos) {
    url.path = "/";
  } else {
    url.path = std::string(rest.substr(path_start));
    if (url.path.front() != '/') url.path.insert(url.path.begin(), '/');
  }
  if (const auto hash = url.path.find('#'); hash != std::string::npos) {
    url.path.erase(hash);
  }

  const auto colon = authority.find(':');
  auto host = authority.substr(0, colon);
  if (host.empty()) return std::nullopt;
  for (char c : host) {
    if (!detail::is_host_char(c)) return std::nullopt;
  }
  url.host = detail::to_lower(host);
  if (colon != std::string_view::npos) {
    auto digits = authority.substr(colon + 1);
    if (digits.empty() || digits.size() > 5) return std::nullopt;
    unsigned value = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') return std::nullopt;
      value = value * 10 + static_cast<unsigned>(c - '0');
    }
    if (value == 0 || value > 65535) return std::nullopt;
    url.port = static_cast<std::uint16_t>(value);
  }
  return url;
}

// Origin of a URL with the scheme's default port filled in.
inline Principal origin_of(const Url& url) {
  auto port = url.port ? url.port : default_port(url.scheme);
  return Principal::network(url.scheme, url.host, port);
}

inline std::optional<Principal> origin_of(std::string_view url_text) {
  auto url = parse_url(url_text);
  if (!url || (!url->port && !default_port(url->scheme))) return std::nullopt;
  return origin_of(*url);
}

inline Principal Principal::network(std::string scheme, std::string host,
                                    std::optional<std::uint16_t> port) {
  scheme = detail::to_lower(scheme);
  host = detail::to_lower(host);
  if (scheme.empty() || scheme == "extension") {
    throw std::invalid_argument("network principal needs a non-extension scheme");
  }
  if (host.empty()) throw std::invalid_argument("principal identity is empty");
  if (!port) port = default_port(scheme);
  if (!port) throw std::invalid_argument("network principal needs a port: " + scheme);
  return Principal(PrincipalKind::network, std::move(scheme), std::move(host),
                   port);
}

inline Principal Principal::extension(std::string id) {
  if (id.empty()) throw std::invalid_argument("extension id is empty");
  return Principal(PrincipalKind::extension, "extension", std::move(id),
                   std::nullopt);
}

inline std::string Principal::describe() const {
  if (is_extension()) return "extension:" + identity_;
  std::string out = scheme_ + "://" + identity_;
  if (port_ && port_ != default_port(scheme_)) {
    out += ':';
    out += std::to_string(*port_);
  }
  return out;
}

}  // namespace provtrack
