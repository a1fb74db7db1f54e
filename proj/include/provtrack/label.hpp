#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include <boost/container/flat_set.hpp>
#include <boost/container/small_vector.hpp>

#include "provtrack/principal.hpp"

namespace provtrack {

// A provenance label: an interned principal plus its first-appearance index.
// Labels borrow their principal from the registry that issued them, so the
// registry must outlive every label (and label set) it produced.
class Label {
 public:
  Label(std::uint32_t index, const Principal* principal) noexcept
      : index_(index), principal_(principal) {}

  std::uint32_t index() const noexcept { return index_; }
  const Principal& principal() const noexcept { return *principal_; }
  bool is_extension() const noexcept { return principal_->is_extension(); }

  friend bool operator==(const Label& a, const Label& b) noexcept {
    return a.index_ == b.index_;
  }

 private:
  std::uint32_t index_;
  const Principal* principal_;
};

// Ordered, duplicate-free chain of labels. Order is insertion order, which is
// the provenance chain from the root principal to the most recent one.
class LabelSet {
 public:
  using Storage = boost::container::small_vector<Label, 4>;

  LabelSet() = default;
  // Label is trivially copyable, so moving never allocates or throws. Saying
  // so lets node vectors move rather than copy when they grow.
  LabelSet(const LabelSet&) = default;
  LabelSet(LabelSet&&) noexcept = default;
  LabelSet& operator=(const LabelSet&) = default;
  LabelSet& operator=(LabelSet&&) noexcept = default;
  explicit LabelSet(Label l) { labels_.push_back(l); }
  LabelSet(std::initializer_list<Label> ls) {
    for (const auto& l : ls) {
      if (!contains(l)) labels_.push_back(l);
    }
  }

  bool contains(const Label& l) const noexcept {
    for (const auto& x : labels_) {
      if (x == l) return true;
    }
    return false;
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const Label& front() const { return labels_.front(); }
  const Label& back() const { return labels_.back(); }
  const Label& operator[](std::size_t i) const { return labels_[i]; }
  auto begin() const noexcept { return labels_.begin(); }
  auto end() const noexcept { return labels_.end(); }

  friend bool operator==(const LabelSet& a, const LabelSet& b) noexcept {
    return a.labels_ == b.labels_;
  }

  // Appends in place when absent; returns whether the set grew.
  bool add(const Label& l) {
    if (contains(l)) return false;
    labels_.push_back(l);
    return true;
  }

 private:
  Storage labels_;
};

inline LabelSet extend(LabelSet ls, const Label& l) {
  ls.add(l);
  return ls;
}

// target followed by every label of current not already present, in order.
inline LabelSet merge(LabelSet target, const LabelSet& current) {
  for (const auto& l : current) target.add(l);
  return target;
}

inline std::vector<Label> extension_labels(const LabelSet& ls) {
  std::vector<Label> out;
  for (const auto& l : ls) {
    if (l.is_extension()) out.push_back(l);
  }
  return out;
}

inline bool has_extension_label(const LabelSet& ls) noexcept {
  for (const auto& l : ls) {
    if (l.is_extension()) return true;
  }
  return false;
}

// Assigns each distinct principal of a session a label whose index is its
// order of first appearance.
class PrincipalRegistry {
 public:
  PrincipalRegistry() = default;
  PrincipalRegistry(const PrincipalRegistry&) = delete;
  PrincipalRegistry& operator=(const PrincipalRegistry&) = delete;

  Label intern(const Principal& p) {
    if (auto it = index_.find(p); it != index_.end()) {
      return Label(*it, &principals_[*it]);
    }
    const auto idx = static_cast<std::uint32_t>(principals_.size());
    principals_.push_back(p);
    index_.insert(idx);
    if (p.is_extension()) ++extensions_;
    return Label(idx, &principals_.back());
  }

  std::optional<Label> find(const Principal& p) const {
    auto it = index_.find(p);
    if (it == index_.end()) return std::nullopt;
    return Label(*it, &principals_[*it]);
  }

  Label at(std::uint32_t index) const {
    return Label(index, &principals_.at(index));
  }

  std::uint32_t next_index() const noexcept {
    return static_cast<std::uint32_t>(principals_.size());
  }
  std::size_t size() const noexcept { return principals_.size(); }
  bool has_extensions() const noexcept { return extensions_ > 0; }

 private:
  // Orders indices by the principal they name; also compares against a bare
  // Principal so lookups need no copy.
  struct ByPrincipal {
    using is_transparent = void;
    const std::deque<Principal>* all;
    const Principal& at(std::uint32_t i) const { return (*all)[i]; }
    const Principal& at(const Principal& p) const { return p; }
    template <typename A, typename B>
    bool operator()(const A& a, const B& b) const { return at(a) < at(b); }
  };

  std::deque<Principal> principals_;
  boost::container::flat_set<std::uint32_t, ByPrincipal, boost::container::small_vector<std::uint32_t, 8>> index_{
      ByPrincipal{&principals_}};
  std::size_t extensions_ = 0;
};

}  // namespace provtrack
