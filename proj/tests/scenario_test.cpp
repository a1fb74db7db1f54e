#include <gtest/gtest.h>

#include "support/fixtures.hpp"

using namespace provtrack;

namespace {

std::vector<ValidationIssue> issues_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<ValidationIssue>& issues, const std::string& location,
               const std::string& fragment) {
  for (const auto& i : issues) {
    if (i.location == location && i.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

std::string dump(const std::vector<ValidationIssue>& issues) {
  std::string out;
  for (const auto& i : issues) out += i.location + ": " + i.message + "\n";
  return out;
}

}  // namespace

TEST(Scenario, MinimalDocumentIsValid) {
  auto s = parse_scenario(R"({"page_url": "https://example.com/", "publisher_html": "<p>hi</p>"})");
  EXPECT_EQ(s.page_url, "https://example.com/");
  ASSERT_TRUE(s.publisher);
  EXPECT_EQ(s.publisher->describe(), "https://example.com");
  ASSERT_EQ(s.timeline.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<directive::Onload>(s.timeline[0]));
  EXPECT_TRUE(s.extensions.empty());
}

TEST(Scenario, ReadsEveryPart) {
  auto s = parse_scenario(R"({
    "page_url": "https://example.com/a",
    "publisher_html": "<body><script src=\"https://o1.example/w.js\"></script></body>",
    "resources": {"https://o1.example/w.js": "w"},
    "scripts": {
      "w": {"ops": [{"op": "create_element", "tag": "div", "var": "d"},
                    {"op": "append_child", "parent": {"tag": "body", "nth": 0}, "child": "d"},
                    {"op": "set_timeout", "delay": 5, "callback": "cb"}]},
      "cb": {"origin": "https://o2.example", "ops": [{"op": "set_text", "target": {"var": "d"}, "value": "x"}]}
    },
    "extensions": [{"id": "e1", "content_scripts": [{"matches": ["*://*.example.com/*"], "js": ["cb"], "run_at": "document_start"}],
                    "background": ["w"]}],
    "timeline": [{"type": "onload"}, {"type": "advance_clock", "by": 10},
                 {"type": "fire_event", "target": {"tag": "div", "nth": 0}, "event": "click"},
                 {"type": "advance_clock", "to": 20},
                 {"type": "programmatic_inject", "extension": "e1", "script": "cb"}]
  })");
  EXPECT_EQ(s.library.scripts.size(), 2u);
  EXPECT_EQ(s.library.resources.at("https://o1.example/w.js"), "w");
  ASSERT_EQ(s.extensions.size(), 1u);
  EXPECT_EQ(s.extensions[0].manifest.content_scripts[0].run_at, RunAt::document_start);
  ASSERT_EQ(s.timeline.size(), 5u);
  const auto& a = std::get<directive::AdvanceClock>(s.timeline[1]);
  EXPECT_TRUE(a.relative);
  EXPECT_EQ(a.ms, 10);
  EXPECT_EQ(std::get<directive::FireEvent>(s.timeline[2]).event, "click");
  EXPECT_EQ(std::get<directive::ProgrammaticInject>(s.timeline[4]).extension, "e1");
}

TEST(Scenario, MissingScriptIdIsNamed) {
  auto issues = issues_of(R"({
    "page_url": "https://example.com/",
    "publisher_html": "<p></p>",
    "resources": {"https://o1.example/w.js": "widget"}
  })");
  ASSERT_FALSE(issues.empty());
  EXPECT_TRUE(has_issue(issues, "/resources/https:~1~1o1.example~1w.js", "'widget'")) << dump(issues);
}

TEST(Scenario, InlineScriptIdsInMarkupMustExist) {
  auto issues = issues_of(R"({"page_url": "https://example.com/",
                              "publisher_html": "<script>ghost</script>"})");
  EXPECT_TRUE(has_issue(issues, "/publisher_html", "'ghost'")) << dump(issues);
}

TEST(Scenario, MalformedUrls) {
  auto issues = issues_of(R"({
    "page_url": "not a url",
    "publisher_html": "<p></p>",
    "scripts": {"s": {"origin": "ftp//x", "ops": [{"op": "load_script", "url": "::"}]}}
  })");
  EXPECT_TRUE(has_issue(issues, "/page_url", "malformed")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/scripts/s/origin", "malformed")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/scripts/s/ops/0/url", "malformed")) << dump(issues);
}

TEST(Scenario, ReportsAllProblemsAtOnce) {
  auto issues = issues_of(R"({
    "page_url": "https://example.com/",
    "publisher_html": "",
    "bogus": 1,
    "scripts": {"s": {"ops": [{"op": "fly"}, {"op": "set_timeout", "delay": -1, "callback": "s"},
                              {"op": "set_interval", "period": 0, "callback": "nope"}]}},
    "extensions": [{"id": "x", "content_scripts": [{"matches": [], "js": ["s"]}]},
                   {"id": "x", "content_scripts": [{"matches": ["bad"], "js": ["s"], "run_at": "later"}]}],
    "timeline": [{"type": "advance_clock", "to": 50}, {"type": "advance_clock", "to": 10},
                 {"type": "advance_clock", "to": 5, "by": 5}, {"type": "programmatic_inject", "extension": "y", "script": "s"}]
  })");
  EXPECT_TRUE(has_issue(issues, "/bogus", "unknown key")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/publisher_html", "empty")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/scripts/s/ops/0/op", "'fly'")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/scripts/s/ops/1/delay", "non-negative")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/scripts/s/ops/2/period", "positive")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/scripts/s/ops/2/callback", "'nope'")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/extensions/0/content_scripts/0", "non-empty")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/extensions/1/id", "duplicate")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/extensions/1/content_scripts/0/run_at", "'later'")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/timeline/1/to", "backwards")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/timeline/2", "exactly one")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/timeline/3/extension", "'y'")) << dump(issues);
  EXPECT_TRUE(has_issue(issues, "/timeline", "onload")) << dump(issues);
}

TEST(Scenario, OnloadMustAppearExactlyOnce) {
  const std::string head = R"({"page_url": "https://example.com/", "publisher_html": "<p></p>", "timeline": )";
  EXPECT_TRUE(has_issue(issues_of(head + "[]}"), "/timeline", "found 0"));
  EXPECT_TRUE(has_issue(issues_of(head + R"([{"type":"onload"},{"type":"onload"}]})"), "/timeline", "found 2"));
  EXPECT_TRUE(issues_of(head + R"([{"type":"onload"}]})").empty());
}

TEST(Scenario, UnterminatedMarkupIsRejected) {
  auto issues = issues_of(R"({"page_url": "https://example.com/", "publisher_html": "<div class=\"x"})");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].location, "/publisher_html");
}

TEST(Scenario, BadJsonIsAValidationError) {
  auto issues = issues_of("{\"page_url\": ");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].message.find("JSON"), std::string::npos);
}

TEST(Scenario, ErrorMessageListsLocations) {
  try {
    parse_scenario(R"({"page_url": "x", "publisher_html": "<p></p>"})", "demo.scenario");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("demo.scenario"), std::string::npos);
    EXPECT_NE(what.find("/page_url"), std::string::npos);
  }
}

TEST(Scenario, ShippedScenariosLoad) {
  for (const auto* name : {"fig2", "ad_iframe", "translate_div", "userscript_img"}) {
    EXPECT_NO_THROW(load_scenario(fixtures::source_path(std::string("scenarios/") + name + ".scenario")))
        << name;
  }
}

TEST(Scenario, MissingFileIsAnIoError) {
  EXPECT_THROW(load_scenario("/nonexistent/dir/none.scenario"), IoError);
  EXPECT_THROW(write_file("/nonexistent/dir/out.html", "x"), IoError);
}
