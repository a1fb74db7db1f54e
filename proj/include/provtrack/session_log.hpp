#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "provtrack/dom.hpp"

namespace provtrack {

struct ScriptErrorRecord {
  std::string script;                   // script id, or url for failed loads
  std::optional<std::size_t> op_index;  // absent when the script never started
  std::string message;
};

struct RemovalRecord {
  NodeId node;
  std::string path;  // empty for nodes that were not connected
  std::string tag;   // "#text" for text nodes
  LabelSet actor;
};

struct SessionLog {
  std::vector<ScriptErrorRecord> script_errors;
  std::vector<RemovalRecord> removals;
  std::size_t mutations = 0;
  std::size_t highlights = 0;  // attach-time indicator hook firings
};

}  // namespace provtrack
