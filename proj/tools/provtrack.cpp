#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "provtrack/provtrack.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kIo = 2;

int cmd_run(const std::string& path, const std::string& out_html, const std::string& out_report,
            const std::string& color, const std::string& mode, bool no_provenance) {
  auto scenario = provtrack::load_scenario(path);
  provtrack::SessionOptions opts;
  opts.indicator.border_color = color;
  opts.chain_mode = mode == "full" ? provtrack::ChainMode::full_chain
                                   : provtrack::ChainMode::extension_only;
  opts.tracking = !no_provenance;
  const auto result = provtrack::run_session(scenario, opts);
  const auto report = provtrack::to_json(result.report).dump(2) + "\n";

  if (out_html.empty()) {
    std::cout << result.annotated_html << "\n";
  } else {
    provtrack::write_file(out_html, result.annotated_html);
  }
  if (out_report.empty()) {
    std::cout << report;
  } else {
    provtrack::write_file(out_report, report);
  }
  std::cerr << "nodes=" << result.stats.nodes << " mutations=" << result.stats.mutations
            << " labels=" << result.stats.labels_interned << " roots=" << result.roots.size()
            << " script_errors=" << result.log.script_errors.size()
            << " elapsed_ms=" << result.stats.elapsed_ms << "\n";
  return kOk;
}

int cmd_bench(const provtrack::BenchConfig& cfg) {
  const auto r = provtrack::run_benchmark(cfg);
  std::printf("elements=%zu scripts=%zu extensions=%zu reps=%zu dom_ops=%zu\n", cfg.elements,
              cfg.scripts, cfg.extensions, cfg.reps, r.dom_operations);
  std::printf("tracking off: mean %.3f ms (sd %.3f)\n", r.off.mean(), r.off.stddev());
  std::printf("tracking on:  mean %.3f ms (sd %.3f)\n", r.on.mean(), r.on.stddev());
  std::printf("overhead: %.2f%%\n", 100.0 * r.overhead());
  std::printf("nodes off=%zu on=%zu identical_dom=%s\n", r.nodes_off, r.nodes_on,
              r.same_dom ? "yes" : "no");
  return kOk;
}

int cmd_oracle(const std::string& path) {
  const auto scenario = provtrack::load_scenario(path);
  const auto r = provtrack::oracle_attribution(scenario);
  nlohmann::ordered_json j;
  j["aborted"] = r.aborted;
  if (r.aborted) j["abort_message"] = r.abort_message;
  j["script_errors"] = r.script_errors;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& [id, n] : r.nodes) {
    nlohmann::ordered_json e;
    e["node_id"] = id;
    e["tag"] = n.tag;
    e["parent"] = n.parent ? nlohmann::ordered_json(*n.parent) : nlohmann::ordered_json();
    auto& ps = e["principals"] = nlohmann::ordered_json::array();
    for (const auto& p : n.principals) ps.push_back(p.describe());
    j["nodes"].push_back(std::move(e));
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"provtrack: element-level content provenance for web pages"};
  app.require_subcommand(1);

  std::string scenario, out_html, out_report, color = "red", mode = "extension";
  bool no_provenance = false;
  auto* run = app.add_subcommand("run", "replay a scenario and emit annotated HTML and a report");
  run->add_option("--scenario", scenario, "scenario file")->required();
  run->add_option("--out-html", out_html, "annotated HTML output (default stdout)");
  run->add_option("--out-report", out_report, "JSON report output (default stdout)");
  run->add_option("--border-color", color, "indicator border color")->capture_default_str();
  run->add_option("--chain-mode", mode, "tooltip summary")
      ->check(CLI::IsMember({"full", "extension"}))
      ->capture_default_str();
  run->add_flag("--no-provenance", no_provenance, "disable label tracking");

  provtrack::BenchConfig bench_cfg;
  auto* bench = app.add_subcommand("bench", "time a synthetic workload with tracking on and off");
  bench->add_option("--elements", bench_cfg.elements)->capture_default_str();
  bench->add_option("--scripts", bench_cfg.scripts)->capture_default_str();
  bench->add_option("--extensions", bench_cfg.extensions)->capture_default_str();
  bench->add_option("--reps", bench_cfg.reps)->check(CLI::PositiveNumber)->capture_default_str();

  std::string oracle_scenario;
  auto* oracle = app.add_subcommand("oracle", "dump the reference attribution of a scenario");
  oracle->add_option("--scenario", oracle_scenario, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) {
      if (color.empty()) throw provtrack::ValidationError({}, {{"--border-color", "color is empty"}});
      return cmd_run(scenario, out_html, out_report, color, mode, no_provenance);
    }
    if (*bench) return cmd_bench(bench_cfg);
    if (*oracle) return cmd_oracle(oracle_scenario);
  } catch (const provtrack::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const provtrack::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const provtrack::StructuralError& e) {
    std::cerr << "structural error: " << e.what() << "\n";
    return kInvalid;
  } catch (const provtrack::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
