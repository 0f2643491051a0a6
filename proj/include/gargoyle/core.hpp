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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gargoyle {

/// Simulated time in integer milliseconds.
using TimeMs = std::int64_t;

using DeviceId  = std::string;  // forwarding device id ("R1", "C2", ...)
using UserId    = std::string;
using IpAddr    = std::string;
using ZoneId    = std::string;
using ObjectId  = std::string;
using SegmentId = std::string;
using Label     = std::string;
using RoleId    = std::string;  // "R2", "R10", ...
using FlowId    = std::string;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : Error { using Error::Error; };
struct TopologyError : Error { using Error::Error; };
struct UnknownDeviceError : Error { using Error::Error; };
struct PortOutOfRangeError : Error { using Error::Error; };
struct NotAttachedError : Error { using Error::Error; };
struct UnreachableError : Error { using Error::Error; };
struct UnknownTargetError : Error { using Error::Error; };
struct UnknownObjectError : Error { using Error::Error; };
struct UnknownVocabularyError : Error { using Error::Error; };
struct DuplicatePriorityError : Error { using Error::Error; };
struct SessionOnDenyError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// splitmix64: identical sequences on every platform, unlike the standard
// distributions whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return bound == 0 ? 0 : next() % bound;
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// True with probability pct/100.
  bool percent(unsigned pct) { return below(100) < pct; }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Small string helpers

inline std::optional<int> parse_role_index(const RoleId& role) {
  if (role.size() < 2 || role[0] != 'R') return std::nullopt;
  int value = 0;
  for (std::size_t i = 1; i < role.size(); ++i) {
    if (role[i] < '0' || role[i] > '9') return std::nullopt;
    value = value * 10 + (role[i] - '0');
  }
  return value;
}

inline bool has_prefix(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace gargoyle
