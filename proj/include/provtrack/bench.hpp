#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "provtrack/session.hpp"

namespace provtrack {

struct BenchConfig {
  std::size_t elements = 1000;  // N, each costs create + set_attribute + append
  std::size_t scripts = 10;     // M external publisher scripts
  std::size_t extensions = 2;   // K extensions, one content script each
  std::size_t reps = 3;         // R
};

struct Timing {
  std::vector<double> samples_ms;

  double mean() const {
    if (samples_ms.empty()) return 0;
    return std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / samples_ms.size();
  }
  double stddev() const {
    if (samples_ms.size() < 2) return 0;
    const double m = mean();
    double acc = 0;
    for (double x : samples_ms) acc += (x - m) * (x - m);
    return std::sqrt(acc / (samples_ms.size() - 1));
  }
};

struct BenchResult {
  Timing on;
  Timing off;
  std::size_t dom_operations = 0;
  std::size_t nodes_on = 0;
  std::size_t nodes_off = 0;
  bool same_dom = true;

  // (on - off) / off
  double overhead() const {
    const double base = off.mean();
    return base > 0 ? (on.mean() - base) / base : 0;
  }
};

// N elements spread over M publisher scripts (each from its own origin) and K
// extension content scripts. Every script builds a container under <body>
// and fills it.
inline Scenario synthetic_scenario(const BenchConfig& cfg) {
  Scenario s;
  s.page_url = "https://publisher.example/index.html";
  s.publisher = origin_of(s.page_url);
  const std::size_t workers = cfg.scripts + cfg.extensions;
  std::string html = "<html><head><title>bench</title></head><body><div id=\"main\"></div>";

  auto make_script = [&](const std::string& id, std::size_t count) {
    Script script;
    script.id = id;
    script.ops.push_back(op::CreateElement{"section", "c"});
    script.ops.push_back(op::AppendChild{NodeQuery{"body", 0}, "c"});
    for (std::size_t i = 0; i < count; ++i) {
      script.ops.push_back(op::CreateElement{"div", "e"});
      script.ops.push_back(op::SetAttribute{VarRef{"e"}, "class", "item-" + std::to_string(i % 7)});
      script.ops.push_back(op::AppendChild{VarRef{"c"}, "e"});
    }
    s.library.scripts.emplace(id, std::move(script));
  };

  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t count = workers == 0 ? 0 : cfg.elements / workers;
    if (w < (workers == 0 ? 0 : cfg.elements % workers)) ++count;
    if (w < cfg.scripts) {
      const auto id = "page-" + std::to_string(w);
      const auto url = "https://cdn" + std::to_string(w) + ".example/lib.js";
      make_script(id, count);
      s.library.resources.emplace(url, id);
      html += "<script src=\"" + url + "\"></script>";
    } else {
      const auto k = w - cfg.scripts;
      const auto id = "ext-script-" + std::to_string(k);
      make_script(id, count);
      Extension ext;
      ext.manifest.extension_id = "bench-ext-" + std::to_string(k);
      ContentScriptEntry entry;
      entry.matches.push_back(*MatchPattern::parse("<all_urls>"));
      entry.script_ids.push_back(id);
      entry.run_at = RunAt::document_idle;
      ext.manifest.content_scripts.push_back(std::move(entry));
      s.extensions.push_back(std::move(ext));
    }
  }
  html += "</body></html>";
  s.publisher_html = std::move(html);
  s.timeline.push_back(directive::Onload{});
  return s;
}

inline double time_session(const Scenario& s, bool tracking, SessionResult* keep = nullptr) {
  SessionOptions opts;
  opts.tracking = tracking;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = run_session(s, opts);
  const auto t1 = std::chrono::steady_clock::now();
  if (keep) *keep = std::move(r);
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

// Repetitions run sequentially, alternating off/on after one warmup pair, so
// drift in machine load hits both arms alike.
inline BenchResult run_benchmark(const BenchConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("reps must be at least 1");
  const auto s = synthetic_scenario(cfg);
  BenchResult result;
  result.dom_operations = 3 * cfg.elements + 2 * (cfg.scripts + cfg.extensions);

  SessionResult on, off;
  time_session(s, false, &off);
  time_session(s, true, &on);
  result.nodes_on = on.stats.nodes;
  result.nodes_off = off.stats.nodes;
  result.same_dom = on.html == off.html;

  for (std::size_t r = 0; r < cfg.reps; ++r) {
    result.off.samples_ms.push_back(time_session(s, false));
    result.on.samples_ms.push_back(time_session(s, true));
  }
  return result;
}

// Startup cost: sessions over a page with no scripts and no extensions, timed
// in batches so each sample is well above clock resolution.
inline BenchResult run_startup_benchmark(std::size_t reps, std::size_t batch) {
  Scenario s;
  s.page_url = "https://publisher.example/";
  s.publisher = origin_of(s.page_url);
  s.publisher_html = "<html><head></head><body></body></html>";
  s.timeline.push_back(directive::Onload{});
  BenchResult result;
  auto batch_ms = [&](bool tracking) {
    double total = 0;
    for (std::size_t i = 0; i < batch; ++i) total += time_session(s, tracking);
    return total / static_cast<double>(batch);
  };
  batch_ms(false);
  batch_ms(true);
  for (std::size_t r = 0; r < reps; ++r) {
    result.off.samples_ms.push_back(batch_ms(false));
    result.on.samples_ms.push_back(batch_ms(true));
  }
  return result;
}

}  // namespace provtrack
