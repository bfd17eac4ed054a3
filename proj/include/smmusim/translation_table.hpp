// Copyright 2026 The smmusim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <variant>

#include "smmusim/phys_mem.hpp"

namespace smmusim
{

  /// Long-descriptor field layout as stored little-endian in physical
  /// memory. The builder writes every bit outside these fields as zero; the
  /// walker ignores attribute and software bits.
  namespace descriptor
  {
    constexpr uint64_t validBit = uint64_t(1) << 0;
    constexpr uint64_t typeBit = uint64_t(1) << 1;    // levels 0-2: table; level 3: page
    constexpr uint64_t outputMask = 0x0000'ffff'ffff'f000ull;  // bits [47:12]

    constexpr uint64_t makeTable(uint64_t nextPa)
    { return (nextPa & outputMask) | typeBit | validBit; }

    constexpr uint64_t makePage(uint64_t pagePa)
    { return (pagePa & outputMask) | typeBit | validBit; }
  }

  /// Walk geometry: input/output address widths and the table root (the
  /// TTBR0 value). Only the 4 KB granule is supported.
  struct WalkConfig
  {
    unsigned iaBits = 48;       // 25..48
    unsigned oaBits = 48;       // one of 32, 36, 40, 42, 44, 48
    uint64_t root = 0;          // 4 KB-aligned table base
    unsigned granuleBytes = 4096;
  };

  struct WalkFault
  {
    enum class Kind
    {
      AddressSizeFaultInput,    // va outside 2^iaBits; carries no level
      AddressSizeFaultOutput,   // final pa outside 2^oaBits
      TranslationFault          // first invalid descriptor, at .level
    };

    Kind kind = Kind::TranslationFault;
    int level = -1;
    uint64_t va = 0;
  };

  const char* name(WalkFault::Kind kind);

  /// Result of a table walk: a physical address or a typed fault.
  struct WalkResult
  {
    std::variant<uint64_t, WalkFault> value;

    bool ok() const
    { return std::holds_alternative<uint64_t>(value); }

    uint64_t pa() const
    { return std::get<uint64_t>(value); }

    const WalkFault& fault() const
    { return std::get<WalkFault>(value); }
  };

  /// Invoked once per descriptor fetch: walk level, address the descriptor
  /// was read from, and its raw value.
  using WalkObserver = std::function<void(int level, uint64_t descAddr,
                                          uint64_t desc)>;

  /// Validate a walk configuration; throws on unsupported granule, width or
  /// alignment.
  void checkConfig(const WalkConfig& cfg);

  /// First level of a walk for the given input-address width: 40-48 bits
  /// start at level 0, 31-39 at level 1, 25-30 at level 2.
  unsigned startLevel(unsigned iaBits);

  /// Table index of va at the given level: bits [47:39], [38:30], [29:21]
  /// and [20:12] for levels 0 to 3.
  unsigned levelIndex(uint64_t va, unsigned level);

  /// Install the 4 KB mapping va -> pa, allocating intermediate tables on
  /// demand. Mapping an already-mapped va to a different pa throws Remap;
  /// re-mapping to the same pa is a no-op.
  void mapPage(PhysMemory& mem, const WalkConfig& cfg, uint64_t va,
               uint64_t pa);

  /// Remove the mapping of va, leaving intermediate tables in place. Throws
  /// NotMapped if va does not currently translate.
  void unmapPage(PhysMemory& mem, const WalkConfig& cfg, uint64_t va);

  /// Walk va through the table at cfg.root. Never throws for translation
  /// failures; those come back as WalkFault values.
  WalkResult walk(const PhysMemory& mem, const WalkConfig& cfg, uint64_t va,
                  const WalkObserver& observer = {});

  /// Build a free-standing table (a modeled process page table whose root
  /// plays the role of the pgd) holding the given page mappings. The
  /// returned configuration translates with a 40-bit output space.
  WalkConfig buildProcessTable(PhysMemory& mem, unsigned iaBits,
                               std::span<const std::pair<uint64_t, uint64_t>>
                               mappings);

}
