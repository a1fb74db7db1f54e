#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/oracle_compare.hpp"
#include "support/random_scenario.hpp"

using namespace provtrack;

namespace {

std::set<std::string> names(const std::set<Principal>& ps) {
  std::set<std::string> out;
  for (const auto& p : ps) out.insert(p.describe());
  return out;
}

const OracleNode& by_tag(const OracleResult& r, const std::string& tag, std::size_t nth = 0) {
  for (const auto& [id, n] : r.nodes) {
    if (n.tag == tag && nth-- == 0) return n;
  }
  throw std::runtime_error("no " + tag);
}

}  // namespace

TEST(Oracle, Fig2WidgetIsPublisherAndFirstOrigin) {
  const auto s = parse_scenario(fixtures::read_scenario("fig2"));
  const auto r = oracle_attribution(s);
  ASSERT_FALSE(r.aborted);
  EXPECT_EQ(names(by_tag(r, "div").principals),
            (std::set<std::string>{"https://example.com", "https://o1.example"}));
  EXPECT_EQ(names(by_tag(r, "span").principals),
            (std::set<std::string>{"https://example.com", "https://o1.example", "https://o2.example",
                                   "extension:ext-abc"}));
}

TEST(Oracle, StaticPageIsAllPublisher) {
  const auto s = parse_scenario(R"({"page_url": "https://example.com/",
    "publisher_html": "<html><head><title>x</title></head><body><div><p>a <b>b</b></p></div></body></html>"})");
  const auto r = oracle_attribution(s);
  ASSERT_GT(r.nodes.size(), 5u);
  for (const auto& [id, n] : r.nodes) {
    EXPECT_EQ(names(n.principals), std::set<std::string>{"https://example.com"}) << id;
  }
}

TEST(Oracle, ContentScriptNodesAreExtensionRooted) {
  const auto s = parse_scenario(fixtures::read_scenario("ad_iframe"));
  const auto r = oracle_attribution(s);
  const auto& frame = by_tag(r, "iframe");
  EXPECT_TRUE(frame.extension_rooted);
  EXPECT_FALSE(frame.publisher_on_chain);
  EXPECT_EQ(names(frame.principals), std::set<std::string>{"extension:ext-adframe"});
}

TEST(Oracle, ShippedScenariosAgreeWithEngine) {
  for (const auto* name : {"fig2", "ad_iframe", "translate_div", "userscript_img"}) {
    const auto a = fixtures::compare_with_oracle(parse_scenario(fixtures::read_scenario(name)));
    EXPECT_TRUE(a.ok()) << name << ": " << a.mismatch;
  }
}

TEST(Oracle, RandomCorpusAgreesWithEngine) {
  std::size_t nodes = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto doc = fixtures::random_scenario(seed);
    const auto s = parse_scenario(doc.dump(), "seed " + std::to_string(seed));
    const auto a = fixtures::compare_with_oracle(s);
    ASSERT_TRUE(a.ok()) << "seed " << seed << ": " << a.mismatch << "\n" << doc.dump(1);
    nodes += a.nodes;
  }
  EXPECT_GT(nodes, 2000u);
}
