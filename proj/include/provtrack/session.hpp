#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "provtrack/analyzer.hpp"
#include "provtrack/engine.hpp"
#include "provtrack/scenario.hpp"

namespace provtrack {

struct SessionOptions {
  IndicatorConfig indicator;
  ChainMode chain_mode = ChainMode::extension_only;
  bool tracking = true;
  EngineOptions engine;
};

struct SessionStats {
  std::size_t nodes = 0;
  std::size_t mutations = 0;
  std::size_t labels_interned = 0;
  std::size_t highlights = 0;
  double elapsed_ms = 0;
};

struct SessionResult {
  // Owns the principals every label in final_tree points at.
  std::shared_ptr<PrincipalRegistry> registry;
  DomTree final_tree;
  std::string html;  // serialize(final_tree)
  std::string annotated_html;
  std::vector<SuspiciousRoot> roots;
  ProvenanceReport report;
  SessionLog log;
  SessionStats stats;
};

namespace detail {

inline void inject_phase(ScriptEngine& engine, const Scenario& s, RunAt phase) {
  for (std::size_t i = 0; i < s.extensions.size(); ++i) {
    for (const auto& id : match_content_scripts(s.extensions[i], s.page_url, phase)) {
      engine.inject_content_script(i, id);
    }
  }
}

struct TimelineRunner {
  ScriptEngine& engine;
  const Scenario& s;

  void operator()(const directive::Onload&) { inject_phase(engine, s, RunAt::document_idle); }

  void operator()(const directive::FireEvent& f) {
    if (auto target = engine.find(f.target)) {
      engine.fire_event(*target, f.event);
    } else {
      engine.log().script_errors.push_back(
          {"(timeline)", std::nullopt,
           "no <" + f.target.tag + "> #" + std::to_string(f.target.nth) + " to fire '" + f.event + "' on"});
    }
  }

  void operator()(const directive::AdvanceClock& a) {
    engine.advance_clock(a.relative ? engine.clock().now() + a.ms : a.ms);
  }

  void operator()(const directive::ProgrammaticInject& p) {
    if (auto ext = engine.find_extension(p.extension)) engine.inject_content_script(*ext, p.script);
  }
};

}  // namespace detail

// Replays a validated scenario: parse under the publisher label, background
// scripts and document_start injections, static scripts in document order,
// document_end injections, then the timeline (onload brings document_idle).
// StructuralError propagates and aborts the session.
inline SessionResult run_session(const Scenario& s, const SessionOptions& opts = {}) {
  const auto started = std::chrono::steady_clock::now();
  auto registry = std::make_shared<PrincipalRegistry>();

  LabelSet base;
  if (opts.tracking) {
    if (s.publisher) {
      base = LabelSet(registry->intern(*s.publisher));
    } else {
      auto publisher = origin_of(s.page_url);
      if (!publisher) throw std::invalid_argument("malformed page url: " + s.page_url);
      base = LabelSet(registry->intern(*publisher));
    }
  }

  auto doc = parse_document(s.publisher_html, base);
  SessionResult result{registry, std::move(doc.tree), {}, {}, {}, {}, {}, {}};
  auto& tree = result.final_tree;

  std::size_t highlights = 0;
  if (opts.tracking) {
    tree.set_attach_observer([&highlights](const DomTree& t, NodeId id) {
      if (has_extension_label(t.node(id).provenance)) ++highlights;
    });
  }

  EngineOptions engine_opts = opts.engine;
  engine_opts.tracking = opts.tracking;
  ScriptEngine engine(tree, *registry, s.library, s.extensions, engine_opts);

  for (std::size_t i = 0; i < s.extensions.size(); ++i) {
    for (const auto& id : s.extensions[i].background_scripts) engine.run_background_script(i, id);
  }
  detail::inject_phase(engine, s, RunAt::document_start);
  for (const auto& ref : doc.scripts) engine.run_static_script(ref, base);
  detail::inject_phase(engine, s, RunAt::document_end);
  detail::TimelineRunner runner{engine, s};
  for (const auto& d : s.timeline) std::visit(runner, d);

  tree.set_attach_observer({});
  result.log = engine.log();
  result.log.highlights = highlights;
  // No extension label was ever handed out, so no node can carry one.
  if (opts.tracking && registry->has_extensions()) {
    result.roots = find_suspicious_roots(tree, opts.chain_mode);
  }
  if (result.roots.empty() || !opts.indicator.enabled) {
    result.html = serialize(tree);
    result.annotated_html = result.html;
  } else {
    std::tie(result.html, result.annotated_html) =
        serialize_both(tree, annotation_overlay(tree, result.roots, opts.indicator, opts.chain_mode));
  }
  result.report = emit_report(s.page_url, tree, result.roots, result.log);

  result.stats.nodes = tree.size();
  result.stats.mutations = result.log.mutations;
  result.stats.labels_interned = registry->size();
  result.stats.highlights = highlights;
  result.stats.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace provtrack
