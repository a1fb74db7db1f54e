#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"

using namespace provtrack;
using fixtures::indices;

namespace {

struct Doc {
  fixtures::Universe u;
  DomTree tree{"html", LabelSet(u.l0)};
  NodeId body;
  Doc() {
    body = tree.create_element("body", LabelSet(u.l0));
    tree.insert_element(tree.root(), body, std::nullopt, LabelSet(u.l0));
  }
};

// Parent/children agreement over every live node.
void expect_consistent(const DomTree& t) {
  std::size_t reached = 0;
  t.for_each_preorder([&](const DomNode& n) {
    ++reached;
    EXPECT_FALSE(n.provenance.empty());
    if (n.is_text()) {
      EXPECT_TRUE(n.children.empty());
      EXPECT_TRUE(n.attributes.empty());
    }
    for (auto c : n.children) {
      ASSERT_TRUE(t.node(c).parent.has_value());
      EXPECT_EQ(*t.node(c).parent, n.id);
    }
  });
  std::size_t detached_live = 0;
  for (std::uint32_t i = 0; i < t.ids_allocated(); ++i) {
    if (t.contains(NodeId{i}) && !t.is_connected(NodeId{i})) ++detached_live;
  }
  EXPECT_EQ(reached + detached_live, t.size());
}

}  // namespace

TEST(Dom, InsertLabelsWithCurrentExactly) {
  Doc d;
  auto div = d.tree.create_element("div", LabelSet(d.u.l3));
  d.tree.insert_element(d.body, div, std::nullopt, {d.u.l0, d.u.l1});
  EXPECT_EQ(indices(d.tree.node(div).provenance), (std::vector<std::uint32_t>{0, 1}));

  auto text = d.tree.create_text("hi", LabelSet(d.u.l0));
  d.tree.insert_element(div, text, std::nullopt, LabelSet(d.u.l0));
  EXPECT_EQ(indices(d.tree.node(text).provenance), (std::vector<std::uint32_t>{0}));

  auto frame = d.tree.create_element("iframe", LabelSet(d.u.l3));
  d.tree.insert_element(d.body, frame, div, LabelSet(d.u.l3));
  EXPECT_EQ(indices(d.tree.node(frame).provenance), (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(d.tree.node(d.body).children.front(), frame);
}

TEST(Dom, InsertedProvenanceDoesNotAlias) {
  Doc d;
  LabelSet current{d.u.l0, d.u.l1};
  auto div = d.tree.create_element("div", current);
  d.tree.insert_element(d.body, div, std::nullopt, current);
  current.add(d.u.l2);
  EXPECT_EQ(d.tree.node(div).provenance.size(), 2u);
}

TEST(Dom, StructuralErrors) {
  Doc d;
  auto div = d.tree.create_element("div", LabelSet(d.u.l0));
  EXPECT_THROW(d.tree.insert_element(NodeId{999}, div, std::nullopt, LabelSet(d.u.l0)), StructuralError);
  auto stray = d.tree.create_element("p", LabelSet(d.u.l0));
  EXPECT_THROW(d.tree.insert_element(d.body, div, stray, LabelSet(d.u.l0)), StructuralError);
  d.tree.insert_element(d.body, div, std::nullopt, LabelSet(d.u.l0));
  EXPECT_THROW(d.tree.insert_element(d.body, div, std::nullopt, LabelSet(d.u.l0)), StructuralError);
  EXPECT_THROW(d.tree.remove_element(d.tree.root()), StructuralError);
  EXPECT_THROW(d.tree.modify_element(NodeId{999}, SetText{"x"}, LabelSet(d.u.l0)), StructuralError);
  EXPECT_THROW(d.tree.modify_element(div, SetAttribute{"", "x"}, LabelSet(d.u.l0)), StructuralError);
  auto t = d.tree.create_text("x", LabelSet(d.u.l0));
  EXPECT_THROW(d.tree.insert_element(t, stray, std::nullopt, LabelSet(d.u.l0)), StructuralError);
  EXPECT_THROW(d.tree.insert_element(div, d.body, std::nullopt, LabelSet(d.u.l0)), StructuralError);
}

TEST(Dom, ModifyMergesTargetOnly) {
  Doc d;
  auto img = d.tree.create_element("img", LabelSet(d.u.l0));
  d.tree.insert_element(d.body, img, std::nullopt, LabelSet(d.u.l0));
  d.tree.modify_element(img, SetAttribute{"src", "ad.png"}, LabelSet(d.u.l3));
  EXPECT_EQ(indices(d.tree.node(img).provenance), (std::vector<std::uint32_t>{0, 3}));
  EXPECT_EQ(*d.tree.node(img).attribute("src"), "ad.png");
  EXPECT_EQ(indices(d.tree.node(d.body).provenance), (std::vector<std::uint32_t>{0}));

  d.tree.modify_element(img, SetAttribute{"src", "b.png"}, {d.u.l0, d.u.l3});
  EXPECT_EQ(indices(d.tree.node(img).provenance), (std::vector<std::uint32_t>{0, 3}));

  auto div = d.tree.create_element("div", {d.u.l0, d.u.l1});
  d.tree.insert_element(d.body, div, std::nullopt, {d.u.l0, d.u.l1});
  d.tree.modify_element(div, SetAttribute{"class", "x"}, {d.u.l0, d.u.l2});
  EXPECT_EQ(indices(d.tree.node(div).provenance), (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(Dom, SetTextReplacesTextChildren) {
  Doc d;
  auto p = d.tree.create_element("p", LabelSet(d.u.l0));
  d.tree.insert_element(d.body, p, std::nullopt, LabelSet(d.u.l0));
  d.tree.modify_element(p, SetText{"one"}, LabelSet(d.u.l1));
  ASSERT_EQ(d.tree.node(p).children.size(), 1u);
  auto t1 = d.tree.node(p).children[0];
  EXPECT_EQ(indices(d.tree.node(t1).provenance), (std::vector<std::uint32_t>{1}));
  d.tree.modify_element(p, SetText{"two"}, LabelSet(d.u.l0));
  EXPECT_FALSE(d.tree.contains(t1));
  EXPECT_EQ(serialize(d.tree, p), "<p>two</p>");
  d.tree.modify_element(p, SetText{""}, LabelSet(d.u.l0));
  EXPECT_TRUE(d.tree.node(p).children.empty());
  EXPECT_THROW(d.tree.modify_element(d.body, SetText{"x"}, LabelSet(d.u.l0)), StructuralError);
}

TEST(Dom, RemoveDropsSubtreeAndNeverReusesIds) {
  Doc d;
  auto mid = d.tree.create_element("div", LabelSet(d.u.l0));
  d.tree.insert_element(d.body, mid, std::nullopt, LabelSet(d.u.l0));
  for (int i = 0; i < 3; ++i) {
    auto c = d.tree.create_element("span", LabelSet(d.u.l0));
    d.tree.insert_element(mid, c, std::nullopt, LabelSet(d.u.l0));
  }
  const auto before = d.tree.size();
  const auto allocated = d.tree.ids_allocated();
  d.tree.remove_element(mid);
  EXPECT_EQ(d.tree.size(), before - 4);
  EXPECT_FALSE(d.tree.contains(mid));
  auto fresh = d.tree.create_element("b", LabelSet(d.u.l0));
  EXPECT_EQ(fresh.value, allocated);
  expect_consistent(d.tree);
}

TEST(Dom, RemoveLeafText) {
  Doc d;
  auto t = d.tree.create_text("x", LabelSet(d.u.l0));
  d.tree.insert_element(d.body, t, std::nullopt, LabelSet(d.u.l0));
  d.tree.remove_element(t);
  EXPECT_TRUE(d.tree.node(d.body).children.empty());
}

TEST(Dom, SerializeScaffoldAndEscaping) {
  Doc d;
  EXPECT_EQ(serialize(d.tree), "<html><body></body></html>");
  auto div = d.tree.create_element("div", LabelSet(d.u.l0));
  d.tree.set_presentation_attribute(div, "title", "say \"hi\" & <go>");
  d.tree.insert_element(d.body, div, std::nullopt, LabelSet(d.u.l0));
  auto t = d.tree.create_text("a<b & \"c\"", LabelSet(d.u.l0));
  d.tree.insert_element(div, t, std::nullopt, LabelSet(d.u.l0));
  auto br = d.tree.create_element("br", LabelSet(d.u.l0));
  d.tree.insert_element(d.body, br, std::nullopt, LabelSet(d.u.l0));
  EXPECT_EQ(serialize(d.tree),
            "<html><body><div title=\"say &quot;hi&quot; &amp; &lt;go&gt;\">a&lt;b &amp; \"c\"</div>"
            "<br></body></html>");
}

TEST(Dom, AttributesKeepInsertionOrder) {
  Doc d;
  auto a = d.tree.create_element("a", LabelSet(d.u.l0));
  d.tree.modify_element(a, SetAttribute{"z", "1"}, LabelSet(d.u.l0));
  d.tree.modify_element(a, SetAttribute{"a", "2"}, LabelSet(d.u.l0));
  d.tree.modify_element(a, SetAttribute{"z", "3"}, LabelSet(d.u.l0));
  EXPECT_EQ(serialize(d.tree, a), "<a z=\"3\" a=\"2\"></a>");
}

TEST(Dom, PresentationAttributesLeaveProvenance) {
  Doc d;
  d.tree.set_presentation_attribute(d.body, "style", "color: red");
  EXPECT_EQ(indices(d.tree.node(d.body).provenance), (std::vector<std::uint32_t>{0}));
}

TEST(Dom, NodePathUsesTagOrdinals) {
  Doc d;
  std::vector<NodeId> divs;
  for (int i = 0; i < 3; ++i) {
    auto p = d.tree.create_element("p", LabelSet(d.u.l0));
    d.tree.insert_element(d.body, p, std::nullopt, LabelSet(d.u.l0));
    auto div = d.tree.create_element("div", LabelSet(d.u.l0));
    d.tree.insert_element(d.body, div, std::nullopt, LabelSet(d.u.l0));
    divs.push_back(div);
  }
  EXPECT_EQ(node_path(d.tree, divs[2]), "html[0]/body[0]/div[2]");
  auto t = d.tree.create_text("x", LabelSet(d.u.l0));
  d.tree.insert_element(divs[1], t, std::nullopt, LabelSet(d.u.l0));
  EXPECT_EQ(node_path(d.tree, t), "html[0]/body[0]/div[1]/#text[0]");
}

TEST(Dom, AttachObserverFiresForConnectedInsertsOnly) {
  Doc d;
  std::vector<NodeId> seen;
  d.tree.set_attach_observer([&](const DomTree&, NodeId id) { seen.push_back(id); });
  auto loose = d.tree.create_element("div", LabelSet(d.u.l0));
  auto inner = d.tree.create_element("span", LabelSet(d.u.l0));
  d.tree.insert_element(loose, inner, std::nullopt, LabelSet(d.u.l0));
  EXPECT_TRUE(seen.empty());
  d.tree.insert_element(d.body, loose, std::nullopt, LabelSet(d.u.l0));
  EXPECT_EQ(seen, std::vector<NodeId>{loose});
}

// Random operation sequences keep the tree consistent and label sets monotone.
TEST(DomProperties, RandomMutationSequences) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    Doc d;
    std::vector<Label> pool{d.u.l0, d.u.l1, d.u.l2, d.u.l3, d.u.l4};
    auto pick_set = [&] {
      LabelSet s;
      const auto n = 1 + rng() % 3;
      for (std::size_t i = 0; i < n; ++i) s.add(pool[rng() % pool.size()]);
      return s;
    };
    std::vector<NodeId> elements{d.body};
    for (int step = 0; step < 40; ++step) {
      auto live = [&] {
        std::vector<NodeId> out;
        for (auto e : elements)
          if (d.tree.contains(e) && d.tree.is_connected(e)) out.push_back(e);
        return out;
      }();
      const auto target = live[rng() % live.size()];
      switch (rng() % 4) {
        case 0: {
          auto cur = pick_set();
          auto n = d.tree.create_element("div", cur);
          d.tree.insert_element(target, n, std::nullopt, cur);
          EXPECT_EQ(d.tree.node(n).provenance, cur);
          elements.push_back(n);
          break;
        }
        case 1: {
          const auto before = d.tree.node(target).provenance;
          d.tree.modify_element(target, SetAttribute{"k", std::to_string(step)}, pick_set());
          const auto& after = d.tree.node(target).provenance;
          for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(after[i], before[i]);
          break;
        }
        case 2:
          if (target != d.body) d.tree.remove_element(target);
          break;
        default: {
          auto cur = pick_set();
          auto t = d.tree.create_text("t", cur);
          d.tree.insert_element(target, t, std::nullopt, cur);
        }
      }
    }
    expect_consistent(d.tree);
  }
}
