#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "support/fixtures.hpp"

using namespace provtrack;
using fixtures::chain_of;

namespace {

Scenario shipped(const std::string& name) {
  return parse_scenario(fixtures::read_scenario(name), name);
}

std::string golden(const std::string& name) {
  return read_file(fixtures::source_path("tests/golden/" + name + ".html"));
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PROVTRACK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Session, Fig2Chains) {
  const auto r = run_session(shipped("fig2"));
  EXPECT_EQ(chain_of(r, "h1"), std::vector<std::string>{"https://example.com"});
  EXPECT_EQ(chain_of(r, "div"), (std::vector<std::string>{"https://example.com", "https://o1.example"}));
  EXPECT_EQ(chain_of(r, "span"),
            (std::vector<std::string>{"https://example.com", "https://o1.example", "https://o2.example",
                                      "extension:ext-abc"}));
  EXPECT_EQ(r.html, golden("fig2"));
  ASSERT_EQ(r.roots.size(), 1u);
  EXPECT_EQ(r.roots[0].kind, ProvenanceKind::modified);
}

TEST(Session, RunsAreDeterministic) {
  for (const auto* name : {"fig2", "ad_iframe", "translate_div", "userscript_img"}) {
    const auto s = shipped(name);
    const auto a = run_session(s);
    const auto b = run_session(s);
    EXPECT_EQ(a.annotated_html, b.annotated_html) << name;
    EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump()) << name;
  }
}

TEST(Session, DetectionGoldens) {
  for (const auto* name : {"ad_iframe", "translate_div", "userscript_img"}) {
    const auto r = run_session(shipped(name));
    EXPECT_EQ(r.annotated_html, golden(name)) << name;
    EXPECT_EQ(r.roots.size(), 1u) << name;
  }
}

TEST(Session, AdIframeIsOneInjectedRoot) {
  const auto r = run_session(shipped("ad_iframe"));
  ASSERT_EQ(r.report.roots.size(), 1u);
  EXPECT_EQ(r.report.roots[0].tag, "iframe");
  EXPECT_EQ(r.report.roots[0].kind, ProvenanceKind::injected);
  EXPECT_EQ(r.report.roots[0].extensions, std::vector<std::string>{"ext-adframe"});
  EXPECT_EQ(r.stats.highlights, 1u);
}

TEST(Session, WithoutExtensionsNothingIsFlagged) {
  for (const auto* name : {"fig2", "ad_iframe", "translate_div", "userscript_img"}) {
    auto s = shipped(name);
    s.extensions.clear();
    std::erase_if(s.timeline, [](const Directive& d) {
      return std::holds_alternative<directive::ProgrammaticInject>(d);
    });
    const auto r = run_session(s);
    EXPECT_TRUE(r.roots.empty()) << name;
    EXPECT_EQ(r.annotated_html, r.html) << name;
  }
}

TEST(Session, TrackingOffLeavesDomUnchanged) {
  for (const auto* name : {"fig2", "ad_iframe", "translate_div", "userscript_img"}) {
    const auto s = shipped(name);
    SessionOptions off;
    off.tracking = false;
    const auto a = run_session(s);
    const auto b = run_session(s, off);
    EXPECT_EQ(a.html, b.html) << name;
    EXPECT_EQ(a.log.script_errors.size(), b.log.script_errors.size()) << name;
    EXPECT_TRUE(b.roots.empty());
    EXPECT_EQ(b.annotated_html, b.html);
  }
}

TEST(Session, FullChainTooltip) {
  SessionOptions opts;
  opts.chain_mode = ChainMode::full_chain;
  opts.indicator.border_color = "orange";
  const auto r = run_session(shipped("fig2"), opts);
  EXPECT_NE(r.annotated_html.find(
                "style=\"border: 3px solid orange\" title=\"https://example.com → https://o1.example → "
                "https://o2.example → extension:ext-abc\""),
            std::string::npos)
      << r.annotated_html;
}

TEST(Session, ReportJsonShape) {
  const auto j = to_json(run_session(shipped("translate_div")).report);
  EXPECT_EQ(j["page_url"], "https://shop.example/product/42");
  ASSERT_EQ(j["roots"].size(), 1u);
  for (const auto* key : {"node_id", "path", "tag", "kind", "extensions", "chain", "summary_full",
                          "summary_extension", "mode_applied"}) {
    EXPECT_TRUE(j["roots"][0].contains(key)) << key;
  }
}

TEST(Session, TimelineQueryMissIsLogged) {
  const auto r = fixtures::run_json(R"({
    "page_url": "https://example.com/",
    "publisher_html": "<p>x</p>",
    "timeline": [{"type": "onload"}, {"type": "fire_event", "target": {"tag": "button"}, "event": "click"}]
  })");
  ASSERT_EQ(r.log.script_errors.size(), 1u);
  EXPECT_EQ(r.log.script_errors[0].script, "(timeline)");
}

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "provtrack_cli_test";
  std::filesystem::create_directories(dir);
  const auto fig2 = fixtures::source_path("scenarios/fig2.scenario");
  const auto html = (dir / "out.html").string();
  const auto report = (dir / "out.json").string();

  EXPECT_EQ(cli("run --scenario " + fig2 + " --out-html " + html + " --out-report " + report), 0);
  EXPECT_EQ(read_file(html), run_session(shipped("fig2")).annotated_html);
  EXPECT_TRUE(nlohmann::json::accept(read_file(report)));

  const auto bad = (dir / "bad.scenario").string();
  write_file(bad, R"({"page_url": "nope", "publisher_html": ""})");
  EXPECT_EQ(cli("run --scenario " + bad), 1);
  EXPECT_EQ(cli("run --scenario " + (dir / "missing.scenario").string()), 2);
  EXPECT_EQ(cli("run --scenario " + fig2 + " --chain-mode sideways"), 1);
  EXPECT_EQ(cli("oracle --scenario " + fig2), 0);
  EXPECT_EQ(cli("bench --elements 50 --scripts 2 --extensions 1 --reps 1"), 0);
  std::filesystem::remove_all(dir);
}
