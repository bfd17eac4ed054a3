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

#include <array>
#include <cstdint>
#include <optional>

#include "smmusim/errors.hpp"
#include "smmusim/translation_table.hpp"

namespace smmusim
{

  constexpr unsigned numContextBanks = 16;

  /// Context-bank attribute register type. Only Stage1WithStage2Bypass is
  /// operative in this single-stage model; a transaction resolving to a bank
  /// of any other type raises an invalid-context fault.
  enum class CbarType : uint8_t
  {
    Stage2,
    Stage1WithStage2Bypass,
    Stage1WithStage2Fault,
    Stage1ThenStage2
  };

  /// Decode the 3-bit physical-address-size field into an output width:
  /// 0 -> 32, 1 -> 36, 2 -> 40, 3 -> 42, 4 -> 44, 5 -> 48. Codes 6 and 7 are
  /// reserved.
  unsigned decodePasize(uint8_t code);

  /// One of the 16 translation contexts: table base, address-size controls,
  /// enable bit and the most recent walk fault taken in this bank.
  struct ContextBank
  {
    unsigned index = 0;
    bool enabled = false;           // SCTLR.M
    uint64_t ttbr0 = 0;
    uint8_t t0sz = 0;
    uint8_t pasize = 0;
    CbarType cbar = CbarType::Stage1WithStage2Bypass;
    std::optional<WalkFault> lastFault;

    unsigned iaBits() const
    { return 64 - t0sz; }

    unsigned oaBits() const
    { return decodePasize(pasize); }

    WalkConfig walkConfig() const
    { return WalkConfig{ iaBits(), oaBits(), ttbr0, 4096 }; }
  };

  /// The bank file: 16 banks plus an allocation bitmap. Allocation always
  /// hands out the lowest free index.
  class ContextBankFile
  {
  public:

    ContextBankFile();

    /// Allocate the lowest free bank, reset to disabled with a
    /// stage-1-with-stage-2-bypass CBAR. Throws NoFreeBank when all 16 are
    /// taken.
    unsigned allocate();

    /// Release an allocated bank, clearing its state.
    void release(unsigned index);

    bool isAllocated(unsigned index) const;

    unsigned allocatedCount() const;

    /// Program table base and address-size fields. The bank keeps its enable
    /// state; callers enable separately.
    void program(unsigned index, uint64_t ttbr0, uint8_t t0sz,
                 uint8_t pasize);

    void enable(unsigned index, bool on = true);

    ContextBank& bank(unsigned index);
    const ContextBank& bank(unsigned index) const;

  private:

    unsigned checkIndex(unsigned index) const;

    std::array<ContextBank, numContextBanks> banks_{};
    uint16_t allocated_ = 0;
  };

}
