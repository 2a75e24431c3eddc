#include "logres/entry.hpp"

#include <algorithm>
#include <iterator>

namespace logres {

Entry::Entry(Bytes bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty()) throw std::invalid_argument("entry must be nonempty");
  if (bytes_.size() > kHardMaxEntrySize) throw std::invalid_argument("entry exceeds 65535 bytes");
}

EntrySet::EntrySet(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
}

EntrySet::EntrySet(std::initializer_list<std::string_view> entries) {
  std::vector<Entry> v;
  v.reserve(entries.size());
  for (auto s : entries) v.push_back(Entry::from_string(s));
  *this = EntrySet(std::move(v));
}

bool EntrySet::contains(const Entry& e) const {
  return std::binary_search(entries_.begin(), entries_.end(), e);
}

bool EntrySet::includes(const EntrySet& other) const {
  return std::includes(entries_.begin(), entries_.end(), other.entries_.begin(), other.entries_.end());
}

bool EntrySet::insert(Entry e) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), e);
  if (it != entries_.end() && *it == e) return false;
  entries_.insert(it, std::move(e));
  return true;
}

EntrySet EntrySet::united(const EntrySet& other) const {
  EntrySet out;
  out.entries_.reserve(entries_.size() + other.entries_.size());
  std::set_union(entries_.begin(), entries_.end(), other.entries_.begin(), other.entries_.end(),
                 std::back_inserter(out.entries_));
  return out;
}

EntrySet EntrySet::minus(const EntrySet& other) const {
  EntrySet out;
  std::set_difference(entries_.begin(), entries_.end(), other.entries_.begin(), other.entries_.end(),
                      std::back_inserter(out.entries_));
  return out;
}

void EntrySet::encode(Writer& w) const {
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) w.bytes16(e.bytes());
}

Bytes EntrySet::encode() const {
  Writer w;
  encode(w);
  return std::move(w).take();
}

EntrySet EntrySet::decode(Reader& r) {
  auto count = r.u32();
  // Each entry needs at least 3 bytes on the wire; reject absurd counts early.
  if (count > r.remaining() / 3) throw DecodeError("entry count exceeds input");
  EntrySet out;
  out.entries_.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto bytes = r.bytes16();
    if (bytes.empty()) throw DecodeError("empty entry");
    Entry e(std::move(bytes));
    if (!out.entries_.empty() && !(out.entries_.back() < e)) {
      throw DecodeError("entry set not in canonical order");
    }
    out.entries_.push_back(std::move(e));
  }
  return out;
}

}  // namespace logres
