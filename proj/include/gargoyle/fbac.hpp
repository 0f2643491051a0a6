// Copyright 2026 The Gargoyle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gargoyle/core.hpp"

namespace gargoyle::fbac {

// ---------------------------------------------------------------------------
// Function universe

enum class Function : unsigned { View = 0, Search, Copy, Paste, Email, Print };

inline constexpr std::size_t kFunctionCount = 6;

inline constexpr std::array<const char*, kFunctionCount> kFunctionNames = {
    "View", "Search", "Copy", "Paste", "Email", "Print"};

inline const char* to_string(Function f) {
  return kFunctionNames[static_cast<unsigned>(f)];
}

inline std::optional<Function> function_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kFunctionCount; ++i) {
    if (name == kFunctionNames[i]) return static_cast<Function>(i);
  }
  return std::nullopt;
}

/// Subset of the six-function universe, value type with set algebra.
class FunctionSet {
 public:
  constexpr FunctionSet() = default;

  static constexpr FunctionSet all() { return FunctionSet((1u << kFunctionCount) - 1); }
  static constexpr FunctionSet none() { return FunctionSet(0); }

  static FunctionSet of(std::initializer_list<Function> fns) {
    FunctionSet s;
    for (Function f : fns) s.bits_ |= bit(f);
    return s;
  }

  static FunctionSet from_names(const std::vector<std::string>& names) {
    FunctionSet s;
    for (const auto& n : names) {
      auto f = function_from_string(n);
      if (!f) throw SchemaError("unknown function name: " + n);
      s.bits_ |= bit(*f);
    }
    return s;
  }

  /// Construct directly from a 6-bit mask; used by exhaustive algebra tests.
  static constexpr FunctionSet from_mask(unsigned mask) {
    return FunctionSet(mask & ((1u << kFunctionCount) - 1));
  }

  bool contains(Function f) const { return bits_ & bit(f); }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const {
    std::size_t n = 0;
    for (unsigned b = bits_; b; b >>= 1) n += b & 1u;
    return n;
  }
  unsigned mask() const { return bits_; }

  FunctionSet unite(FunctionSet other) const { return FunctionSet(bits_ | other.bits_); }
  FunctionSet minus(FunctionSet other) const { return FunctionSet(bits_ & ~other.bits_); }
  FunctionSet intersect(FunctionSet other) const { return FunctionSet(bits_ & other.bits_); }

  bool subset_of(FunctionSet other) const { return (bits_ & ~other.bits_) == 0; }

  /// Names in declaration order; canonical form for serialization.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kFunctionCount; ++i) {
      if (bits_ & (1u << i)) out.emplace_back(kFunctionNames[i]);
    }
    return out;
  }

  friend bool operator==(FunctionSet a, FunctionSet b) { return a.bits_ == b.bits_; }
  friend bool operator!=(FunctionSet a, FunctionSet b) { return a.bits_ != b.bits_; }

 private:
  explicit constexpr FunctionSet(unsigned bits) : bits_(bits) {}
  static constexpr unsigned bit(Function f) { return 1u << static_cast<unsigned>(f); }
  unsigned bits_ = 0;
};

// ---------------------------------------------------------------------------
// Segment-structured objects

struct Segment {
  SegmentId id;
  std::vector<Label> labels;

  bool has_label(const Label& l) const {
    return std::find(labels.begin(), labels.end(), l) != labels.end();
  }
};

struct DataObject {
  ObjectId id;
  std::vector<Segment> segments;  // ordered; ids unique within the object

  bool has_label(const Label& l) const {
    for (const auto& s : segments)
      if (s.has_label(l)) return true;
    return false;
  }
};

/// Object catalog keyed by object id.
class Catalog {
 public:
  void add(DataObject obj) {
    objects_.emplace(obj.id, std::move(obj));
  }

  bool contains(const ObjectId& id) const { return objects_.count(id) > 0; }

  const DataObject& get(const ObjectId& id) const {
    auto it = objects_.find(id);
    if (it == objects_.end()) throw UnknownObjectError("unknown object: " + id);
    return it->second;
  }

  const std::map<ObjectId, DataObject>& objects() const { return objects_; }

 private:
  std::map<ObjectId, DataObject> objects_;
};

/// Catalog file: {"objects":[{"id":...,"segments":[{"id":...,"labels":[...]}]}]}
inline Catalog load_catalog(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("objects") || !doc["objects"].is_array()) {
    throw SchemaError("catalog: missing 'objects' array");
  }
  Catalog catalog;
  try {
    for (const auto& jo : doc["objects"]) {
      DataObject obj;
      obj.id = jo.at("id").get<std::string>();
      std::set<std::string> seen;
      for (const auto& js : jo.at("segments")) {
        Segment seg;
        seg.id = js.at("id").get<std::string>();
        if (!seen.insert(seg.id).second) {
          throw SchemaError("catalog: duplicate segment " + seg.id + " in " + obj.id);
        }
        for (const auto& jl : js.value("labels", nlohmann::json::array())) {
          seg.labels.push_back(jl.get<std::string>());
        }
        obj.segments.push_back(std::move(seg));
      }
      catalog.add(std::move(obj));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("catalog: ") + e.what());
  }
  return catalog;
}

// ---------------------------------------------------------------------------
// Segment selection for restriction operations

struct SelectAll {};
struct SelectSegment { SegmentId id; };
struct SelectLabel { Label label; };

using SegmentSelector = std::variant<SelectAll, SelectSegment, SelectLabel>;

inline bool selects(const SegmentSelector& sel, const Segment& seg) {
  if (std::holds_alternative<SelectAll>(sel)) return true;
  if (const auto* s = std::get_if<SelectSegment>(&sel)) return s->id == seg.id;
  return seg.has_label(std::get<SelectLabel>(sel).label);
}

// ---------------------------------------------------------------------------
// Access Control Tensor
//
// (subject, object, segment) -> authorized FunctionSet. Unset triples default
// to the full universe; restrictions are deny-lists layered on that base.
// Values are immutable: restrict() returns a new tensor.
class AccessControlTensor {
 public:
  FunctionSet allowed(const UserId& subject, const ObjectId& object,
                      const SegmentId& segment) const {
    auto it = cells_.find(Key{subject, object, segment});
    return it == cells_.end() ? FunctionSet::all() : it->second;
  }

  /// Seeds an explicit allowed set (the allow-list construction).
  AccessControlTensor with_allowed(const UserId& subject, const ObjectId& object,
                                   const SegmentId& segment, FunctionSet fns) const {
    AccessControlTensor next = *this;
    next.cells_[Key{subject, object, segment}] = fns;
    return next;
  }

  /// Removes `fns` from every selected segment of `object` for `subject`.
  AccessControlTensor restrict(const UserId& subject, const DataObject& object,
                               const SegmentSelector& selector, FunctionSet fns) const {
    AccessControlTensor next = *this;
    for (const auto& seg : object.segments) {
      if (!selects(selector, seg)) continue;
      Key key{subject, object.id, seg.id};
      auto it = next.cells_.find(key);
      FunctionSet current = it == next.cells_.end() ? FunctionSet::all() : it->second;
      next.cells_[key] = current.minus(fns);
    }
    return next;
  }

  /// Per-segment allowed sets for one (subject, object) slice.
  std::map<SegmentId, FunctionSet> render_view(const UserId& subject,
                                               const DataObject& object) const {
    std::map<SegmentId, FunctionSet> view;
    for (const auto& seg : object.segments) {
      view[seg.id] = allowed(subject, object.id, seg.id);
    }
    return view;
  }

  std::size_t cell_count() const { return cells_.size(); }

 private:
  using Key = std::tuple<UserId, ObjectId, SegmentId>;
  std::map<Key, FunctionSet> cells_;
};

}  // namespace gargoyle::fbac
