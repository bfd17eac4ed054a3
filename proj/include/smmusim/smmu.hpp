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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "smmusim/context_bank.hpp"
#include "smmusim/phys_mem.hpp"
#include "smmusim/stream_mapping.hpp"

namespace smmusim
{

  enum class AccessType : uint8_t { Read, Write };
  enum class TransactionKind : uint8_t { Data, Instruction };

  /// One device-issued access presented to the SMMU. Under bypass the va is
  /// used unmodified as the physical address. The cache bits are recorded in
  /// traces and never affect behavior.
  struct Transaction
  {
    uint16_t streamId = 0;
    uint64_t va = 0;
    AccessType access = AccessType::Read;
    TransactionKind kind = TransactionKind::Data;
    std::vector<uint8_t> payload;   // write data
    uint64_t readLen = 0;           // read size in bytes
    uint8_t cacheBits = 0;
  };

  struct Bypassed
  {
    uint64_t pa = 0;
  };

  struct Translated
  {
    uint64_t pa = 0;
    unsigned bank = 0;
  };

  enum class GlobalFaultReason : uint8_t
  {
    UnmatchedStream,
    MultipleMatch,
    StreamFaultContext
  };

  struct GlobalFault
  {
    GlobalFaultReason reason = GlobalFaultReason::UnmatchedStream;
  };

  enum class ContextFaultKind : uint8_t
  {
    Walk,             // carries the WalkFault detail
    InvalidContext,   // CBAR type other than stage-1-with-stage-2-bypass
    InstCfgMismatch   // instruction/data restriction violated
  };

  struct ContextFault
  {
    unsigned bank = 0;
    ContextFaultKind kind = ContextFaultKind::Walk;
    std::optional<WalkFault> walkFault;   // engaged when kind == Walk
  };

  using Outcome = std::variant<Bypassed, Translated, GlobalFault,
                               ContextFault>;

  const char* name(GlobalFaultReason reason);

  bool isFault(const Outcome& outcome);

  /// Physical address of a Bypassed or Translated outcome; empty on faults.
  std::optional<uint64_t> resolvedPa(const Outcome& outcome);

  /// Human-readable one-liner, mirroring the reason strings used in traces.
  std::string describe(const Outcome& outcome);

  /// Reason token of a faulted outcome ("UnmatchedStream",
  /// "TranslationFault", "InstCfgMismatch", ...); empty otherwise.
  std::string faultReason(const Outcome& outcome);

  enum class UnmatchedPolicy : uint8_t { Bypass, Fault };

  /// Receives one formatted trace line (without newline) per pipeline event.
  using TraceSink = std::function<void(std::string_view line)>;

  /// The transaction pipeline: stream mapping, context resolution, then
  /// bypass, fault or a table walk through a TLB. All modeled failures are
  /// Outcome variants; translate itself never throws.
  class Smmu
  {
  public:

    bool globalEnable() const
    { return globalEnable_; }

    void setGlobalEnable(bool on)
    { globalEnable_ = on; }

    UnmatchedPolicy unmatchedPolicy() const
    { return unmatchedPolicy_; }

    void setUnmatchedPolicy(UnmatchedPolicy policy)
    { unmatchedPolicy_ = policy; }

    StreamMapTable& streamMap()
    { return table_; }

    const StreamMapTable& streamMap() const
    { return table_; }

    ContextBankFile& banks()
    { return banks_; }

    const ContextBankFile& banks() const
    { return banks_; }

    /// Swap the trace sink. An empty sink drops events.
    void setTraceSink(TraceSink sink)
    { trace_ = std::move(sink); }

    /// Resolve one transaction:
    ///  1. a globally disabled SMMU bypasses everything;
    ///  2. the stream map resolves the id (no match follows the unmatched
    ///     policy, multiple matches fault);
    ///  3. the matched S2CR selects bypass, fault or a context bank;
    ///  4. the bank applies the instruction/data restriction, its CBAR type,
    ///     its enable bit, then the TLB, then walks its table.
    /// Successful walks install a TLB entry; walk faults are recorded in the
    /// bank's fault record.
    Outcome translate(const PhysMemory& mem, const Transaction& txn);

    struct AccessResult
    {
      Outcome outcome;
      std::vector<uint8_t> data;   // read data, when the access was a read
    };

    /// translate plus the memory access at the resolved address. Faulted
    /// transactions touch no memory.
    AccessResult access(PhysMemory& mem, const Transaction& txn);

    void tlbInvalidateAll();

    /// Drop the cached translation of one va page in one bank.
    void tlbInvalidateVa(unsigned bank, uint64_t va);

    size_t tlbSize() const
    { return tlb_.size(); }

  private:

    static uint64_t tlbKey(unsigned bank, uint64_t va)
    { return (uint64_t(bank) << 40) | (va >> PhysMemory::pageShift); }

    void emit(const char* fmt, ...) __attribute__((format(printf, 2, 3)));

    void emitOutcome(const Outcome& outcome);

    bool globalEnable_ = true;
    UnmatchedPolicy unmatchedPolicy_ = UnmatchedPolicy::Bypass;
    StreamMapTable table_;
    ContextBankFile banks_;
    std::unordered_map<uint64_t, uint64_t> tlb_;   // (bank, va page) -> pa page
    uint64_t seq_ = 0;
    TraceSink trace_;
  };

}
