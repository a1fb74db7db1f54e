#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "provtrack/engine.hpp"
#include "provtrack/scenario.hpp"

// A second, deliberately naive interpreter for scenarios. It keeps the raw
// principal call chain of every running script and its own node table, and
// never touches Label, LabelSet or DomTree. Nodes get the set of principals on
// the chain when they are inserted, plus every chain that later modifies them.

namespace provtrack {

struct OracleNode {
  std::uint32_t id = 0;
  std::optional<std::uint32_t> parent;
  std::string tag;  // "#text" for text nodes
  std::set<Principal> principals;
  // Inserted while the chain was rooted at an extension.
  bool extension_rooted = false;
  // The inserting chain contained the publisher origin.
  bool publisher_on_chain = false;
  // A later modification came from a chain containing the publisher origin.
  bool publisher_modified = false;
};

struct OracleResult {
  bool aborted = false;
  std::string abort_message;
  std::size_t script_errors = 0;
  std::map<std::uint32_t, OracleNode> nodes;  // every live node, by id
};

namespace detail {

class Oracle {
 public:
  Oracle(const Scenario& s, EngineOptions opts) : s_(s), opts_(opts) {}

  OracleResult run() {
    OracleResult out;
    try {
      replay();
    } catch (const Abort& a) {
      out.aborted = true;
      out.abort_message = a.message;
    }
    out.script_errors = errors_;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (!n.alive) continue;
      OracleNode o;
      o.id = i;
      o.parent = n.parent;
      o.tag = n.element ? n.tag : "#text";
      o.principals = n.principals;
      o.extension_rooted = n.extension_rooted;
      o.publisher_on_chain = n.publisher_on_chain;
      o.publisher_modified = n.publisher_modified;
      out.nodes.emplace(i, std::move(o));
    }
    return out;
  }

 private:
  using Chain = std::vector<Principal>;

  struct Fail {
    std::string message;
  };
  struct Abort {
    std::string message;
  };

  struct Node {
    bool alive = true;
    bool element = true;
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::string text;
    std::optional<std::uint32_t> parent;
    std::vector<std::uint32_t> children;
    std::set<Principal> principals;
    bool extension_rooted = false;
    bool publisher_on_chain = false;
    bool publisher_modified = false;
  };

  struct Call {
    Chain chain;
    ExecSide side;
    std::size_t ext;
    std::map<std::string, std::uint32_t> vars;
  };

  struct Callback {
    std::string script;
    Chain chain;
    ExecSide side;
    std::size_t ext;
    CallbackKind kind;
    std::uint32_t target;
    std::string event;
    Millis period;
  };

  struct Subscription {
    std::size_t ext;
    ExecSide side;
    std::size_t callback;
  };

  void replay() {
    publisher_ = *origin_of(s_.page_url);
    const Chain page{publisher_};
    const auto markup = parse_document_markup(s_.publisher_html);
    const auto root = new_node(true, "html", page);
    nodes_[root].attrs.insert(markup.attributes.begin(), markup.attributes.end());
    std::vector<Ref> statics;
    for (const auto& c : markup.children) {
      const auto child = build(c, page, statics);
      link(root, child, std::nullopt, page);
    }

    for (std::size_t i = 0; i < s_.extensions.size(); ++i) {
      for (const auto& id : s_.extensions[i].background_scripts) {
        run_extension(i, id, ExecSide::background);
      }
    }
    inject(RunAt::document_start);
    for (const auto& ref : statics) {
      guarded([&] {
        calls_.push_back(Call{page, ExecSide::page, 0, {}});
        try {
          start_script(ref);
        } catch (...) {
          calls_.pop_back();
          throw;
        }
        calls_.pop_back();
      });
    }
    inject(RunAt::document_end);

    for (const auto& d : s_.timeline) {
      if (std::holds_alternative<directive::Onload>(d)) {
        inject(RunAt::document_idle);
      } else if (const auto* f = std::get_if<directive::FireEvent>(&d)) {
        if (auto target = lookup(f->target.tag, f->target.nth)) {
          fire(*target, f->event);
        } else {
          ++errors_;
        }
      } else if (const auto* a = std::get_if<directive::AdvanceClock>(&d)) {
        advance(a->relative ? now_ + a->ms : a->ms);
      } else if (const auto* p = std::get_if<directive::ProgrammaticInject>(&d)) {
        for (std::size_t i = 0; i < s_.extensions.size(); ++i) {
          if (s_.extensions[i].id() == p->extension) {
            run_extension(i, p->script, ExecSide::content);
            break;
          }
        }
      }
    }
  }

  template <typename F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const Fail&) {
      ++errors_;
    }
  }

  void inject(RunAt phase) {
    for (std::size_t i = 0; i < s_.extensions.size(); ++i) {
      for (const auto& id : match_content_scripts(s_.extensions[i], s_.page_url, phase)) {
        run_extension(i, id, ExecSide::content);
      }
    }
  }

  void run_extension(std::size_t ext, const std::string& id, ExecSide side) {
    const Script* script = s_.library.find(id);
    if (!script) {
      ++errors_;
      return;
    }
    const Chain chain{s_.extensions[ext].principal()};
    guarded([&] { run_script(*script, chain, side, ext, std::nullopt); });
  }

  void run_script(const Script& script, const Chain& chain, ExecSide side, std::size_t ext,
                  std::optional<std::uint32_t> self) {
    if (depth_ >= opts_.max_script_depth) throw Fail{"too deep"};
    ++depth_;
    calls_.push_back(Call{chain, side, ext, {}});
    if (self) calls_.back().vars["this"] = *self;
    for (const auto& op : script.ops) {
      try {
        std::visit([this](const auto& o) { apply(o); }, op);
      } catch (const Fail&) {
        ++errors_;
        break;
      }
    }
    calls_.pop_back();
    --depth_;
  }

  Call& call() { return calls_.back(); }

  std::set<Principal> principals_of(const Chain& chain) const {
    return std::set<Principal>(chain.begin(), chain.end());
  }

  bool has_publisher(const Chain& chain) const {
    for (const auto& p : chain) {
      if (p == publisher_) return true;
    }
    return false;
  }

  void stamp(std::uint32_t id, const Chain& chain) {
    auto& n = nodes_[id];
    n.principals = principals_of(chain);
    n.extension_rooted = chain.front().is_extension();
    n.publisher_on_chain = has_publisher(chain);
    n.publisher_modified = false;
  }

  void touch(std::uint32_t id, const Chain& chain) {
    auto& n = nodes_[id];
    for (const auto& p : chain) n.principals.insert(p);
    if (has_publisher(chain)) n.publisher_modified = true;
  }

  std::uint32_t new_node(bool element, std::string tag_or_text, const Chain& chain) {
    Node n;
    n.element = element;
    if (element) n.tag = std::move(tag_or_text);
    else n.text = std::move(tag_or_text);
    nodes_.push_back(std::move(n));
    const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
    stamp(id, chain);
    return id;
  }

  struct Ref {
    std::uint32_t node;
    bool external;
    std::string value;
  };

  std::optional<Ref> script_ref(std::uint32_t id) const {
    const auto& n = nodes_[id];
    if (!n.element || n.tag != "script") return std::nullopt;
    std::string body;
    for (auto c : n.children) {
      if (!nodes_[c].element) body += nodes_[c].text;
    }
    const auto src = n.attrs.find("src");
    const std::string* src_ptr = src == n.attrs.end() ? nullptr : &src->second;
    auto found = script_source(n.tag, src_ptr, body);
    if (!found) return std::nullopt;
    return Ref{id, found->first == ScriptRef::Source::external, found->second};
  }

  std::uint32_t build(const MarkupNode& m, const Chain& chain, std::vector<Ref>& refs) {
    const bool element = m.kind == NodeKind::element;
    const auto id = new_node(element, element ? m.tag : m.text, chain);
    nodes_[id].attrs.insert(m.attributes.begin(), m.attributes.end());
    for (const auto& c : m.children) {
      const auto child = build(c, chain, refs);
      link(id, child, std::nullopt, chain);
    }
    if (auto r = script_ref(id)) refs.push_back(std::move(*r));
    return id;
  }

  void link(std::uint32_t parent, std::uint32_t child, std::optional<std::uint32_t> before,
            const Chain& chain) {
    if (!nodes_[parent].element) throw Abort{"insert under text"};
    auto& kids = nodes_[parent].children;
    auto pos = kids.end();
    if (before) {
      pos = std::find(kids.begin(), kids.end(), *before);
      if (pos == kids.end()) throw Abort{"reference is not a child"};
    }
    kids.insert(pos, child);
    nodes_[child].parent = parent;
    stamp(child, chain);
  }

  bool connected(std::uint32_t id) const {
    std::optional<std::uint32_t> cur = id;
    while (cur) {
      if (*cur == 0) return true;
      cur = nodes_[*cur].parent;
    }
    return false;
  }

  void kill(std::uint32_t id) {
    nodes_[id].alive = false;
    for (auto c : nodes_[id].children) kill(c);
  }

  void detach_and_kill(std::uint32_t id) {
    if (id == 0) throw Abort{"remove root"};
    if (auto p = nodes_[id].parent) {
      auto& kids = nodes_[*p].children;
      kids.erase(std::find(kids.begin(), kids.end(), id));
    }
    kill(id);
  }

  void preorder(std::uint32_t id, const std::string& tag, std::size_t& seen,
                std::optional<std::uint32_t>& hit, std::size_t nth) const {
    if (hit) return;
    const auto& n = nodes_[id];
    if (n.element && n.tag == tag) {
      if (seen == nth) {
        hit = id;
        return;
      }
      ++seen;
    }
    for (auto c : n.children) preorder(c, tag, seen, hit, nth);
  }

  std::optional<std::uint32_t> lookup(const std::string& tag, std::size_t nth) const {
    std::size_t seen = 0;
    std::optional<std::uint32_t> hit;
    preorder(0, tag, seen, hit, nth);
    return hit;
  }

  std::uint32_t var(const std::string& name) {
    auto it = call().vars.find(name);
    if (it == call().vars.end() || !nodes_[it->second].alive) throw Fail{"bad var"};
    return it->second;
  }

  std::uint32_t target(const NodeRef& ref) {
    if (const auto* v = std::get_if<VarRef>(&ref)) return var(v->name);
    const auto& q = std::get<NodeQuery>(ref);
    if (auto id = lookup(q.tag, q.nth)) return *id;
    throw Fail{"no match"};
  }

  void need_dom() {
    if (call().side == ExecSide::background) throw Fail{"no dom"};
  }

  void need_extension() {
    if (call().side == ExecSide::page) throw Fail{"not an extension"};
  }

  void load(const std::string& url) {
    auto res = s_.library.resources.find(url);
    const Script* script = res == s_.library.resources.end() ? nullptr : s_.library.find(res->second);
    if (!script) {
      ++errors_;
      return;
    }
    auto origin = script->origin ? script->origin : origin_of(url);
    if (!origin) {
      ++errors_;
      return;
    }
    Chain chain = call().chain;
    chain.push_back(*origin);
    const auto side = call().side;
    const auto ext = call().ext;
    run_script(*script, chain, side, ext, std::nullopt);
  }

  void start_script(const Ref& ref) {
    started_.insert(ref.node);
    if (ref.external) {
      load(ref.value);
      return;
    }
    const Script* script = s_.library.find(ref.value);
    if (!script) {
      ++errors_;
      return;
    }
    const Chain chain = call().chain;
    run_script(*script, chain, call().side, call().ext, std::nullopt);
  }

  void collect(std::uint32_t id, std::vector<Ref>& out) const {
    if (!started_.contains(id)) {
      if (auto r = script_ref(id)) out.push_back(std::move(*r));
    }
    for (auto c : nodes_[id].children) collect(c, out);
  }

  void attach(std::uint32_t parent, std::uint32_t child, std::optional<std::uint32_t> before) {
    if (child == 0 || nodes_[child].parent) throw Fail{"attached"};
    for (std::optional<std::uint32_t> cur = parent; cur; cur = nodes_[*cur].parent) {
      if (*cur == child) throw Fail{"cycle"};
    }
    link(parent, child, before, call().chain);
    if (!connected(child)) return;
    std::vector<Ref> pending;
    collect(child, pending);
    for (const auto& r : pending) {
      if (!started_.contains(r.node)) start_script(r);
    }
  }

  std::vector<MarkupNode> markup(const std::string& html) {
    try {
      return parse_markup(html);
    } catch (const ParseError&) {
      throw Fail{"parse"};
    }
  }

  void insert_markup(std::uint32_t parent, const std::vector<MarkupNode>& ms) {
    std::vector<Ref> refs;
    std::vector<std::uint32_t> roots;
    const Chain chain = call().chain;
    for (const auto& m : ms) roots.push_back(build(m, chain, refs));
    for (auto r : roots) link(parent, r, std::nullopt, chain);
    if (!connected(parent)) return;
    for (const auto& r : refs) {
      if (!started_.contains(r.node)) start_script(r);
    }
  }

  std::size_t add_callback(CallbackKind kind, const std::string& script, std::uint32_t node = 0,
                           const std::string& event = {}, Millis period = 0) {
    if (!s_.library.find(script)) throw Fail{"unknown callback"};
    callbacks_.push_back(Callback{script, call().chain, call().side, call().ext, kind, node, event, period});
    return callbacks_.size() - 1;
  }

  void run_callback(std::size_t h, std::optional<std::uint32_t> self) {
    const auto cb = callbacks_[h];
    run_script(*s_.library.find(cb.script), cb.chain, cb.side, cb.ext, self);
  }

  void fire(std::uint32_t node, const std::string& event) {
    if (!nodes_[node].alive) return;
    std::vector<std::size_t> snapshot;
    for (std::size_t h = 0; h < callbacks_.size(); ++h) {
      const auto& cb = callbacks_[h];
      if (cb.kind == CallbackKind::event && cb.target == node) snapshot.push_back(h);
    }
    for (auto h : snapshot) {
      if (callbacks_[h].event != event) continue;
      guarded([&] { run_callback(h, node); });
    }
  }

  void advance(Millis to) {
    std::size_t fired = 0;
    while (!timers_.empty() && std::get<0>(*timers_.begin()) <= to) {
      if (fired++ >= opts_.max_timer_firings) {
        ++errors_;
        break;
      }
      const auto [due, seq, h] = *timers_.begin();
      timers_.erase(timers_.begin());
      now_ = due;
      guarded([&] { run_callback(h, std::nullopt); });
      if (callbacks_[h].kind == CallbackKind::interval) {
        timers_.insert({now_ + callbacks_[h].period, seq, h});
      }
    }
    now_ = to;
  }

  void apply(const op::CreateElement& o) {
    need_dom();
    if (o.tag.empty()) throw Fail{"tag"};
    call().vars[o.var] = new_node(true, detail::to_lower(o.tag), call().chain);
  }

  void apply(const op::SetAttribute& o) {
    need_dom();
    const auto id = target(o.target);
    if (o.name.empty() || !nodes_[id].element) throw Abort{"bad attribute"};
    nodes_[id].attrs[o.name] = o.value;
    touch(id, call().chain);
  }

  void apply(const op::SetText& o) {
    need_dom();
    const auto id = target(o.target);
    if (!nodes_[id].element) {
      nodes_[id].text = o.value;
    } else {
      for (auto c : nodes_[id].children) {
        if (nodes_[c].element) throw Abort{"set_text over elements"};
      }
      auto old = std::move(nodes_[id].children);
      nodes_[id].children.clear();
      for (auto c : old) kill(c);
      if (!o.value.empty()) {
        const auto t = new_node(false, o.value, call().chain);
        nodes_[id].children.push_back(t);
        nodes_[t].parent = id;
      }
    }
    touch(id, call().chain);
  }

  void apply(const op::AppendChild& o) {
    need_dom();
    const auto parent = target(o.parent);
    const auto child = var(o.child);
    attach(parent, child, std::nullopt);
  }

  void apply(const op::InsertBefore& o) {
    need_dom();
    const auto parent = target(o.parent);
    const auto child = var(o.child);
    const auto reference = target(o.reference);
    attach(parent, child, reference);
  }

  void apply(const op::Remove& o) {
    need_dom();
    detach_and_kill(target(o.target));
  }

  void apply(const op::SetInnerHtml& o) {
    need_dom();
    const auto id = target(o.target);
    if (!nodes_[id].element) throw Fail{"not an element"};
    const auto ms = markup(o.html);
    const auto old = nodes_[id].children;
    for (auto c : old) detach_and_kill(c);
    insert_markup(id, ms);
  }

  void apply(const op::DocumentWrite& o) {
    need_dom();
    std::optional<std::uint32_t> body;
    for (auto c : nodes_[0].children) {
      if (nodes_[c].element && nodes_[c].tag == "body") {
        body = c;
        break;
      }
    }
    if (!body) throw Fail{"no body"};
    const auto ms = markup(o.html);
    insert_markup(*body, ms);
  }

  void apply(const op::AddEventListener& o) {
    need_dom();
    const auto id = target(o.target);
    add_callback(CallbackKind::event, o.callback, id, o.event);
  }

  void apply(const op::SetTimeout& o) {
    if (o.delay < 0) throw Fail{"delay"};
    const auto h = add_callback(CallbackKind::timeout, o.callback);
    timers_.insert({now_ + o.delay, next_seq_++, h});
  }

  void apply(const op::SetInterval& o) {
    if (o.period <= 0) throw Fail{"period"};
    const auto h = add_callback(CallbackKind::interval, o.callback, 0, {}, o.period);
    timers_.insert({now_ + o.period, next_seq_++, h});
  }

  void apply(const op::LoadScript& o) { load(o.url); }

  void apply(const op::SendMessage&) {
    need_extension();
    const auto ext = call().ext;
    const auto from = call().side;
    std::vector<std::size_t> receivers;
    for (const auto& sub : subscriptions_) {
      if (sub.ext == ext && sub.side != from) receivers.push_back(sub.callback);
    }
    for (auto h : receivers) run_callback(h, std::nullopt);
  }

  void apply(const op::RegisterOnMessage& o) {
    need_extension();
    const auto h = add_callback(CallbackKind::message, o.callback);
    subscriptions_.push_back({call().ext, call().side, h});
  }

  const Scenario& s_;
  EngineOptions opts_;
  Principal publisher_ = Principal::extension("-");
  std::vector<Node> nodes_;
  std::vector<Call> calls_;
  std::size_t depth_ = 0;
  std::size_t errors_ = 0;
  std::set<std::uint32_t> started_;
  std::vector<Callback> callbacks_;
  std::vector<Subscription> subscriptions_;
  std::set<std::tuple<Millis, std::uint64_t, std::size_t>> timers_;
  std::uint64_t next_seq_ = 0;
  Millis now_ = 0;
};

}  // namespace detail

inline OracleResult oracle_attribution(const Scenario& s, EngineOptions opts = {}) {
  return detail::Oracle(s, opts).run();
}

}  // namespace provtrack
