#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "logres/bytes.hpp"

namespace logres {

inline constexpr std::size_t kDefaultMaxEntrySize = 4096;
inline constexpr std::size_t kHardMaxEntrySize = 65535;

/// Opaque client-submitted log content. Nonempty, at most 65535 bytes,
/// ordered byte-lexicographically.
class Entry {
 public:
  explicit Entry(Bytes bytes);
  static Entry from_string(std::string_view s) { return Entry(to_bytes(s)); }

  const Bytes& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

  auto operator<=>(const Entry&) const = default;

 private:
  Bytes bytes_;
};

/// Canonically ordered, duplicate-free set of entries.
///
/// Wire form: count (u32) followed by each entry as u16 length + bytes, in
/// strictly increasing byte-lexicographic order.
class EntrySet {
 public:
  EntrySet() = default;
  explicit EntrySet(std::vector<Entry> entries);
  EntrySet(std::initializer_list<std::string_view> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool contains(const Entry& e) const;
  bool includes(const EntrySet& other) const;
  /// Returns true if the entry was not already present.
  bool insert(Entry e);
  EntrySet united(const EntrySet& other) const;
  EntrySet minus(const EntrySet& other) const;

  void encode(Writer& w) const;
  Bytes encode() const;
  /// Rejects non-canonical order, duplicates, and empty entries.
  static EntrySet decode(Reader& r);

  auto operator<=>(const EntrySet&) const = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace logres
