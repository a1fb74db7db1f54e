#include <gtest/gtest.h>

#include "provtrack/principal.hpp"

using provtrack::Principal;

TEST(Principal, NetworkFillsDefaultPort) {
  auto p = Principal::network("HTTPS", "Example.COM");
  EXPECT_EQ(p.scheme(), "https");
  EXPECT_EQ(p.identity(), "example.com");
  EXPECT_EQ(p.port(), 443);
  EXPECT_FALSE(p.is_extension());
  EXPECT_EQ(Principal::network("http", "a.test").port(), 80);
}

TEST(Principal, ExtensionHasNoPort) {
  auto e = Principal::extension("ext-abc");
  EXPECT_TRUE(e.is_extension());
  EXPECT_EQ(e.scheme(), "extension");
  EXPECT_FALSE(e.port().has_value());
  EXPECT_EQ(e.describe(), "extension:ext-abc");
}

TEST(Principal, ExtensionIdsAreCaseSensitive) {
  EXPECT_NE(Principal::extension("Ext"), Principal::extension("ext"));
}

TEST(Principal, RejectsEmptyIdentityAndPortlessSchemes) {
  EXPECT_THROW(Principal::extension(""), std::invalid_argument);
  EXPECT_THROW(Principal::network("https", ""), std::invalid_argument);
  EXPECT_THROW(Principal::network("ftp", "files.test"), std::invalid_argument);
  EXPECT_THROW(Principal::network("extension", "x", 1), std::invalid_argument);
  EXPECT_NO_THROW(Principal::network("ftp", "files.test", 21));
}

TEST(Principal, DescribeOmitsDefaultPortOnly) {
  EXPECT_EQ(Principal::network("https", "example.com").describe(), "https://example.com");
  EXPECT_EQ(Principal::network("https", "example.com", 443).describe(), "https://example.com");
  EXPECT_EQ(Principal::network("http", "h.test", 8080).describe(), "http://h.test:8080");
}

TEST(Url, ParsesAuthorityAndPath) {
  auto u = provtrack::parse_url("HTTP://Shop.Example:8080/a/b?q=1#frag");
  ASSERT_TRUE(u);
  EXPECT_EQ(u->scheme, "http");
  EXPECT_EQ(u->host, "shop.example");
  EXPECT_EQ(u->port, 8080);
  EXPECT_EQ(u->path, "/a/b?q=1");
  EXPECT_EQ(provtrack::parse_url("https://x.test")->path, "/");
  EXPECT_EQ(provtrack::parse_url("https://x.test?y")->path, "/?y");
}

TEST(Url, RejectsMalformed) {
  for (const char* bad : {"", "example.com", "://x", "https://", "https://:80/", "https://a b/",
                          "https://h:0/", "https://h:65536/", "https://h:8x/", "1http://h/",
                          "extension://abc/"}) {
    EXPECT_FALSE(provtrack::parse_url(bad)) << bad;
  }
}

TEST(Url, OriginUsesEffectivePort) {
  EXPECT_EQ(*provtrack::origin_of("https://example.com/x"),
            *provtrack::origin_of("https://EXAMPLE.com:443/y"));
  EXPECT_NE(*provtrack::origin_of("https://example.com/"),
            *provtrack::origin_of("http://example.com/"));
  EXPECT_FALSE(provtrack::origin_of("gopher://h.test/"));
}
