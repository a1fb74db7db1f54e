#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "provtrack/dom.hpp"
#include "provtrack/extension.hpp"
#include "provtrack/html_parser.hpp"
#include "provtrack/label.hpp"
#include "provtrack/script.hpp"
#include "provtrack/session_log.hpp"
#include "provtrack/virtual_clock.hpp"

namespace provtrack {

// Raised inside a running script; halts that script only.
class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExecSide : std::uint8_t { page, content, background };

// Who a piece of code runs as. `extension` indexes the engine's extension
// list and is ignored for page code.
struct ExecOrigin {
  ExecSide side = ExecSide::page;
  std::size_t extension = 0;

  static ExecOrigin page() { return {}; }
  static ExecOrigin content(std::size_t ext) { return {ExecSide::content, ext}; }
  static ExecOrigin background(std::size_t ext) { return {ExecSide::background, ext}; }
};

enum class CallbackKind : std::uint8_t { event, timeout, interval, message };

using CallbackHandle = std::uint32_t;

struct CallbackEntry {
  std::string script_id;
  LabelSet registering;  // current label set at registration, never updated
  CallbackKind kind = CallbackKind::event;
  ExecOrigin origin;
  NodeId target;           // event listeners
  std::string event_type;  // event listeners
  Millis period = 0;       // intervals
};

// Multiset of registered callbacks; handles are dense indices.
class CallbackRegistry {
 public:
  CallbackHandle add(CallbackEntry e) {
    entries_.push_back(std::move(e));
    return static_cast<CallbackHandle>(entries_.size() - 1);
  }
  const CallbackEntry& at(CallbackHandle h) const { return entries_.at(h); }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::deque<CallbackEntry> entries_;
};

class MessageBus {
 public:
  void subscribe(std::size_t ext, ExecSide side, CallbackHandle h) {
    if (by_ext_.size() <= ext) by_ext_.resize(ext + 1);
    by_ext_[ext].push_back({side, h});
  }

  // Opposite-side handlers of `ext`, in registration order.
  std::vector<CallbackHandle> receivers(std::size_t ext, ExecSide from) const {
    std::vector<CallbackHandle> out;
    if (ext >= by_ext_.size()) return out;
    for (const auto& [side, h] : by_ext_[ext]) {
      if (side != from) out.push_back(h);
    }
    return out;
  }

 private:
  struct Entry {
    ExecSide side;
    CallbackHandle handle;
  };
  std::vector<std::vector<Entry>> by_ext_;
};

struct EngineOptions {
  bool tracking = true;
  std::size_t max_script_depth = 32;
  std::size_t max_timer_firings = 10000;  // per advance_clock call
};

// Interprets scripts against a DomTree under a stack of label sets. Every
// DOM mutation is labeled with the top of the stack.
class ScriptEngine {
 public:
  ScriptEngine(DomTree& tree, PrincipalRegistry& registry, const ScriptLibrary& library,
               std::span<const Extension> extensions, EngineOptions options = {})
      : tree_(tree),
        registry_(registry),
        library_(library),
        extensions_(extensions),
        options_(options),
        extension_labels_(extensions.size()) {}

  ScriptEngine(const ScriptEngine&) = delete;
  ScriptEngine& operator=(const ScriptEngine&) = delete;

  bool tracking() const noexcept { return options_.tracking; }

  const LabelSet& current() const {
    static const LabelSet kEmpty;
    if (!options_.tracking) return kEmpty;
    if (contexts_.empty()) throw std::logic_error("no script is executing");
    return contexts_.back();
  }

  std::size_t context_depth() const noexcept { return contexts_.size(); }

  const SessionLog& log() const noexcept { return log_; }
  SessionLog& log() noexcept { return log_; }
  const VirtualClock& clock() const noexcept { return clock_; }
  const CallbackRegistry& callbacks() const noexcept { return callbacks_; }
  DomTree& tree() noexcept { return tree_; }

  std::optional<std::size_t> find_extension(std::string_view id) const {
    for (std::size_t i = 0; i < extensions_.size(); ++i) {
      if (extensions_[i].id() == id) return i;
    }
    return std::nullopt;
  }

  Label extension_label(std::size_t ext) {
    auto& slot = extension_labels_.at(ext);
    if (!slot) slot = registry_.intern(extensions_[ext].principal());
    return *slot;
  }

  // The nth connected element with the given tag, in document order.
  std::optional<NodeId> find(const NodeQuery& q) const {
    std::size_t seen = 0;
    std::vector<NodeId> stack{tree_.root()};
    while (!stack.empty()) {
      auto id = stack.back();
      stack.pop_back();
      const auto& n = tree_.node(id);
      if (n.is_element() && n.tag == q.tag && seen++ == q.nth) return id;
      for (auto c = n.children.rbegin(); c != n.children.rend(); ++c) stack.push_back(*c);
    }
    return std::nullopt;
  }

  // Runs `s` with `base` pushed as the current label set.
  void execute_script(const Script& s, const LabelSet& base, ExecOrigin origin,
                      std::optional<NodeId> self = std::nullopt) {
    if (script_depth_ >= options_.max_script_depth) {
      throw ScriptError("script nesting limit reached");
    }
    Scope scope(*this, base, origin, true);
    if (self) frames_.back().vars["this"] = *self;
    for (std::size_t i = 0; i < s.ops.size(); ++i) {
      try {
        std::visit([this](const auto& o) { apply(o); }, s.ops[i]);
      } catch (const ScriptError& e) {
        log_.script_errors.push_back({s.id, i, e.what()});
        return;
      }
    }
  }

  // Runs a script element found by the document parser, from `base`.
  void run_static_script(const ScriptRef& ref, const LabelSet& base) {
    top_level([&] {
      Scope scope(*this, base, ExecOrigin::page(), false);
      start_script_element(ref.position, ref.source, ref.value);
    });
  }

  // Loads url from the resource map and runs it under
  // extend(current, origin label). Failures are logged, not thrown.
  void load_external_script(std::string_view url) {
    const Script* s = library_.resolve_url(url);
    if (!s) {
      log_.script_errors.push_back({std::string(url), std::nullopt, "resource not found"});
      return;
    }
    auto origin = ScriptLibrary::load_origin(*s, url);
    if (!origin) {
      log_.script_errors.push_back({std::string(url), std::nullopt, "cannot derive script origin"});
      return;
    }
    LabelSet base;
    if (options_.tracking) base = extend(current(), registry_.intern(*origin));
    execute_script(*s, base, frame().origin);
  }

  // Registers `script_id` under the current label set and execution origin.
  CallbackHandle register_callback(CallbackKind kind, std::string_view script_id,
                                   NodeId target = {}, std::string_view event_type = {},
                                   Millis period = 0) {
    if (!library_.find(script_id)) {
      throw ScriptError("unknown callback script '" + std::string(script_id) + "'");
    }
    CallbackEntry e;
    e.script_id = std::string(script_id);
    e.registering = current();
    e.kind = kind;
    e.origin = frame().origin;
    e.target = target;
    e.event_type = std::string(event_type);
    e.period = period;
    const auto h = callbacks_.add(std::move(e));
    if (kind == CallbackKind::event) listeners_[target].push_back(h);
    return h;
  }

  // Runs every listener of `type` on target, each under its registering set.
  void fire_event(NodeId target, std::string_view type) {
    if (!tree_.contains(target)) return;
    auto it = listeners_.find(target);
    if (it == listeners_.end()) return;
    const auto snapshot = it->second;
    for (auto h : snapshot) {
      const auto& cb = callbacks_.at(h);
      if (cb.event_type != type) continue;
      top_level([&] { run_callback(cb, target); });
    }
  }

  // Fires due timers up to `to`. Returns false if the firing budget ran out.
  bool advance_clock(Millis to) {
    std::size_t fired = 0;
    bool within_budget = true;
    clock_.advance_to(to, [&](const VirtualClock::Firing& f) {
      if (fired++ >= options_.max_timer_firings) {
        within_budget = false;
        return false;
      }
      const auto& cb = callbacks_.at(f.handle);
      top_level([&] { run_callback(cb, std::nullopt); });
      if (cb.kind == CallbackKind::interval) {
        clock_.reschedule(clock_.now() + cb.period, f.seq, f.handle);
      }
      return true;
    });
    if (!within_budget) {
      log_.script_errors.push_back({"(timers)", std::nullopt, "timer firing budget exhausted"});
    }
    return within_budget;
  }

  // Runs a content script with a fresh stack whose base is {extension label}.
  void inject_content_script(std::size_t ext, std::string_view script_id) {
    run_extension_script(ext, script_id, ExecOrigin::content(ext));
  }

  void run_background_script(std::size_t ext, std::string_view script_id) {
    run_extension_script(ext, script_id, ExecOrigin::background(ext));
  }

  // Delivers a message from one side of `ext` to every handler on the other.
  void dispatch_message(std::size_t ext, ExecSide from, std::string_view payload) {
    top_level([&] { deliver(ext, from, payload); });
  }

 private:
  struct Frame {
    ExecOrigin origin;
    std::unordered_map<std::string, NodeId> vars;
  };

  class Scope {
   public:
    Scope(ScriptEngine& e, const LabelSet& base, ExecOrigin origin, bool script)
        : e_(e), script_(script) {
      if (e_.options_.tracking) e_.contexts_.push_back(base);
      e_.frames_.push_back(Frame{origin, {}});
      if (script_) ++e_.script_depth_;
    }
    ~Scope() {
      if (script_) --e_.script_depth_;
      e_.frames_.pop_back();
      if (e_.options_.tracking) e_.contexts_.pop_back();
    }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    ScriptEngine& e_;
    bool script_;
  };

  Frame& frame() {
    if (frames_.empty()) throw std::logic_error("no script is executing");
    return frames_.back();
  }

  template <typename F>
  void top_level(F&& body) {
    try {
      body();
    } catch (const ScriptError& e) {
      log_.script_errors.push_back({"(top-level)", std::nullopt, e.what()});
    }
  }

  void run_extension_script(std::size_t ext, std::string_view script_id, ExecOrigin origin) {
    const Script* s = library_.find(script_id);
    if (!s) {
      log_.script_errors.push_back({std::string(script_id), std::nullopt, "unknown script"});
      return;
    }
    LabelSet base;
    if (options_.tracking) base = LabelSet(extension_label(ext));
    top_level([&] { execute_script(*s, base, origin); });
  }

  void run_callback(const CallbackEntry& cb, std::optional<NodeId> self) {
    const Script* s = library_.find(cb.script_id);
    execute_script(*s, cb.registering, cb.origin, self);
  }

  void deliver(std::size_t ext, ExecSide from, std::string_view /*payload*/) {
    for (auto h : bus_.receivers(ext, from)) run_callback(callbacks_.at(h), std::nullopt);
  }

  void require_dom() {
    if (frame().origin.side == ExecSide::background) {
      throw ScriptError("background scripts cannot access the page DOM");
    }
  }

  void require_extension(std::string_view what) {
    if (frame().origin.side == ExecSide::page) {
      throw ScriptError(std::string(what) + " is only available to extension scripts");
    }
  }

  NodeId resolve_var(const std::string& name) {
    auto& vars = frame().vars;
    auto it = vars.find(name);
    if (it == vars.end()) throw ScriptError("undefined variable '" + name + "'");
    if (!tree_.contains(it->second)) {
      throw ScriptError("variable '" + name + "' refers to a removed node");
    }
    return it->second;
  }

  NodeId query(const NodeQuery& q) {
    if (auto id = find(q)) return *id;
    throw ScriptError("no <" + q.tag + "> #" + std::to_string(q.nth) + " in the document");
  }

  NodeId resolve(const NodeRef& ref) {
    if (const auto* v = std::get_if<VarRef>(&ref)) return resolve_var(v->name);
    return query(std::get<NodeQuery>(ref));
  }

  void start_script_element(NodeId element, ScriptRef::Source source, const std::string& value) {
    started_.insert(element);
    if (source == ScriptRef::Source::external) {
      load_external_script(value);
      return;
    }
    const Script* s = library_.find(value);
    if (!s) {
      log_.script_errors.push_back({value, std::nullopt, "unknown inline script"});
      return;
    }
    execute_script(*s, current(), frame().origin);
  }

  // Starts not-yet-started script elements in a newly connected subtree, in
  // document order.
  void run_connected_scripts(NodeId subtree) {
    std::vector<std::pair<NodeId, std::pair<ScriptRef::Source, std::string>>> pending;
    tree_.for_each_preorder(subtree, [&](const DomNode& n) {
      if (!n.is_element() || n.tag != "script" || started_.contains(n.id)) return;
      std::string body;
      for (auto c : n.children) {
        if (tree_.node(c).is_text()) body += tree_.node(c).text;
      }
      if (auto src = script_source(n.tag, n.attribute("src"), body)) {
        pending.emplace_back(n.id, std::move(*src));
      }
    });
    for (auto& [id, src] : pending) {
      if (started_.contains(id)) continue;
      start_script_element(id, src.first, src.second);
    }
  }

  void attach(NodeId parent, NodeId child, std::optional<NodeId> before) {
    if (child == tree_.root() || tree_.node(child).parent) {
      throw ScriptError("node is already attached");
    }
    for (std::optional<NodeId> cur = parent; cur; cur = tree_.node(*cur).parent) {
      if (*cur == child) throw ScriptError("insertion would create a cycle");
    }
    tree_.insert_element(parent, child, before, current());
    ++log_.mutations;
    if (tree_.is_connected(child)) run_connected_scripts(child);
  }

  void remove_node(NodeId id) {
    if (id == tree_.root()) throw StructuralError("cannot remove the document root");
    const auto& n = tree_.node(id);
    RemovalRecord rec;
    rec.node = id;
    rec.path = tree_.is_connected(id) ? node_path(tree_, id) : std::string();
    rec.tag = n.is_text() ? "#text" : n.tag;
    rec.actor = current();
    log_.removals.push_back(std::move(rec));
    tree_.remove_element(id);
    ++log_.mutations;
  }

  std::vector<MarkupNode> parse_html(const std::string& html) {
    try {
      return parse_markup(html);
    } catch (const ParseError& e) {
      throw ScriptError(std::string("malformed html: ") + e.what());
    }
  }

  // Materializes parsed markup under parent, then runs its scripts.
  void insert_markup(NodeId parent, const std::vector<MarkupNode>& markup) {
    HtmlFragment frag;
    for (const auto& m : markup) {
      frag.roots.push_back(detail::materialize(tree_, m, current(), frag.scripts));
    }
    for (auto r : frag.roots) tree_.insert_element(parent, r, std::nullopt, current());
    ++log_.mutations;
    if (!tree_.is_connected(parent)) return;
    for (const auto& ref : frag.scripts) {
      if (started_.contains(ref.position)) continue;
      start_script_element(ref.position, ref.source, ref.value);
    }
  }

  void apply(const op::CreateElement& o) {
    require_dom();
    if (o.tag.empty()) throw ScriptError("create_element needs a tag");
    const auto id = tree_.create_element(detail::to_lower(o.tag), current());
    frame().vars[o.var] = id;
    ++log_.mutations;
  }

  void apply(const op::SetAttribute& o) {
    require_dom();
    const auto id = resolve(o.target);
    tree_.modify_element(id, provtrack::SetAttribute{o.name, o.value}, current());
    ++log_.mutations;
  }

  void apply(const op::SetText& o) {
    require_dom();
    const auto id = resolve(o.target);
    tree_.modify_element(id, provtrack::SetText{o.value}, current());
    ++log_.mutations;
  }

  void apply(const op::AppendChild& o) {
    require_dom();
    const auto parent = resolve(o.parent);
    const auto child = resolve_var(o.child);
    attach(parent, child, std::nullopt);
  }

  void apply(const op::InsertBefore& o) {
    require_dom();
    const auto parent = resolve(o.parent);
    const auto child = resolve_var(o.child);
    const auto reference = resolve(o.reference);
    attach(parent, child, reference);
  }

  void apply(const op::Remove& o) {
    require_dom();
    remove_node(resolve(o.target));
  }

  void apply(const op::SetInnerHtml& o) {
    require_dom();
    const auto target = resolve(o.target);
    if (!tree_.node(target).is_element()) throw ScriptError("set_inner_html target is not an element");
    const auto markup = parse_html(o.html);
    const auto old = tree_.node(target).children;
    for (auto c : old) remove_node(c);
    insert_markup(target, markup);
  }

  void apply(const op::DocumentWrite& o) {
    require_dom();
    const auto body = tree_.body();
    if (!body) throw ScriptError("document has no body");
    const auto markup = parse_html(o.html);
    insert_markup(*body, markup);
  }

  void apply(const op::AddEventListener& o) {
    require_dom();
    const auto target = resolve(o.target);
    register_callback(CallbackKind::event, o.callback, target, o.event);
  }

  void apply(const op::SetTimeout& o) {
    if (o.delay < 0) throw ScriptError("negative timeout delay");
    const auto h = register_callback(CallbackKind::timeout, o.callback);
    clock_.schedule(clock_.now() + o.delay, h);
  }

  void apply(const op::SetInterval& o) {
    if (o.period <= 0) throw ScriptError("interval period must be positive");
    const auto h = register_callback(CallbackKind::interval, o.callback, {}, {}, o.period);
    clock_.schedule(clock_.now() + o.period, h);
  }

  void apply(const op::LoadScript& o) { load_external_script(o.url); }

  void apply(const op::SendMessage& o) {
    require_extension("send_message");
    const auto origin = frame().origin;
    deliver(origin.extension, origin.side, o.payload);
  }

  void apply(const op::RegisterOnMessage& o) {
    require_extension("register_on_message");
    const auto origin = frame().origin;
    const auto h = register_callback(CallbackKind::message, o.callback);
    bus_.subscribe(origin.extension, origin.side, h);
  }

  DomTree& tree_;
  PrincipalRegistry& registry_;
  const ScriptLibrary& library_;
  std::span<const Extension> extensions_;
  EngineOptions options_;

  std::deque<LabelSet> contexts_;
  std::deque<Frame> frames_;
  std::size_t script_depth_ = 0;

  std::vector<std::optional<Label>> extension_labels_;
  CallbackRegistry callbacks_;
  std::unordered_map<NodeId, std::vector<CallbackHandle>> listeners_;
  MessageBus bus_;
  VirtualClock clock_;
  std::unordered_set<NodeId> started_;
  SessionLog log_;
};

}  // namespace provtrack
