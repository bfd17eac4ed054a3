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

#include "smmusim/smmu.hpp"

#include <cstdarg>
#include <cstdio>

#include "smmusim/translation_table.hpp"

namespace smmusim
{

  const char* name(GlobalFaultReason reason)
  {
    switch (reason)
      {
      case GlobalFaultReason::UnmatchedStream: return "UnmatchedStream";
      case GlobalFaultReason::MultipleMatch: return "MultipleMatch";
      case GlobalFaultReason::StreamFaultContext: return "StreamFaultContext";
      }
    return "?";
  }


  bool isFault(const Outcome& outcome)
  {
    return std::holds_alternative<GlobalFault>(outcome) or
           std::holds_alternative<ContextFault>(outcome);
  }


  std::optional<uint64_t> resolvedPa(const Outcome& outcome)
  {
    if (const auto* b = std::get_if<Bypassed>(&outcome))
      return b->pa;
    if (const auto* t = std::get_if<Translated>(&outcome))
      return t->pa;
    return std::nullopt;
  }


  namespace
  {

    const char* contextFaultReason(const ContextFault& cf)
    {
      switch (cf.kind)
        {
        case ContextFaultKind::InvalidContext: return "InvalidContext";
        case ContextFaultKind::InstCfgMismatch: return "InstCfgMismatch";
        case ContextFaultKind::Walk:
          return cf.walkFault ? name(cf.walkFault->kind) : "Walk";
        }
      return "?";
    }

  }


  std::string describe(const Outcome& outcome)
  {
    char buf[96];
    if (const auto* b = std::get_if<Bypassed>(&outcome))
      snprintf(buf, sizeof(buf), "BYPASS pa=0x%012llx",
               (unsigned long long) b->pa);
    else if (const auto* t = std::get_if<Translated>(&outcome))
      snprintf(buf, sizeof(buf), "XLATE pa=0x%012llx cb=%u",
               (unsigned long long) t->pa, t->bank);
    else if (const auto* g = std::get_if<GlobalFault>(&outcome))
      snprintf(buf, sizeof(buf), "GFAULT reason=%s", name(g->reason));
    else
      {
        const auto& cf = std::get<ContextFault>(outcome);
        snprintf(buf, sizeof(buf), "CFAULT cb=%u reason=%s", cf.bank,
                 contextFaultReason(cf));
      }
    return buf;
  }


  std::string faultReason(const Outcome& outcome)
  {
    if (const auto* g = std::get_if<GlobalFault>(&outcome))
      return name(g->reason);
    if (const auto* c = std::get_if<ContextFault>(&outcome))
      return contextFaultReason(*c);
    return {};
  }


  void Smmu::emit(const char* fmt, ...)
  {
    if (not trace_)
      {
        ++seq_;
        return;
      }

    char body[192];
    va_list args;
    va_start(args, fmt);
    vsnprintf(body, sizeof(body), fmt, args);
    va_end(args);

    char line[224];
    snprintf(line, sizeof(line), "EVT %llu %s",
             (unsigned long long) ++seq_, body);
    trace_(line);
  }


  void Smmu::emitOutcome(const Outcome& outcome)
  {
    if (const auto* b = std::get_if<Bypassed>(&outcome))
      emit("OUT BYPASS pa=0x%012llx", (unsigned long long) b->pa);
    else if (const auto* t = std::get_if<Translated>(&outcome))
      emit("OUT XLATE pa=0x%012llx", (unsigned long long) t->pa);
    else if (const auto* g = std::get_if<GlobalFault>(&outcome))
      emit("OUT GFAULT reason=%s", name(g->reason));
    else
      emit("OUT CFAULT reason=%s",
           contextFaultReason(std::get<ContextFault>(outcome)));
  }


  Outcome Smmu::translate(const PhysMemory& mem, const Transaction& txn)
  {
    emit("TXN sid=0x%04x va=0x%012llx kind=%c acc=%c", txn.streamId,
         (unsigned long long) txn.va,
         txn.kind == TransactionKind::Instruction ? 'I' : 'D',
         txn.access == AccessType::Write ? 'W' : 'R');

    // Single security world: every transaction is determined non-secure.
    emit("SEC NS");

    auto finish = [this] (Outcome outcome) {
      emitOutcome(outcome);
      return outcome;
    };

    if (not globalEnable_)
      return finish(Bypassed{ txn.va });

    MatchResult match = table_.resolve(txn.streamId);
    switch (match.kind)
      {
      case MatchResult::Kind::NoMatch:
        emit("MATCH NOMATCH");
        if (unmatchedPolicy_ == UnmatchedPolicy::Bypass)
          return finish(Bypassed{ txn.va });
        return finish(GlobalFault{ GlobalFaultReason::UnmatchedStream });

      case MatchResult::Kind::MultipleMatch:
        {
          std::string list;
          for (unsigned idx : match.indices)
            {
              if (not list.empty())
                list += ',';
              list += std::to_string(idx);
            }
          emit("MATCH MULTI[%s]", list.c_str());
          return finish(GlobalFault{ GlobalFaultReason::MultipleMatch });
        }

      case MatchResult::Kind::Matched:
        emit("MATCH idx=%u", match.index);
        break;
      }

    const S2cr& s2cr = table_.s2cr(match.index);
    if (s2cr.type == S2crType::Bypass)
      return finish(Bypassed{ txn.va });
    if (s2cr.type == S2crType::Fault or s2cr.type == S2crType::Reserved)
      return finish(GlobalFault{ GlobalFaultReason::StreamFaultContext });

    unsigned bankIndex = s2cr.cbndx;   // program() bounds cbndx to [0, 15]
    ContextBank& bank = banks_.bank(bankIndex);

    if ((s2cr.instCfg == InstCfg::Instruction and
         txn.kind == TransactionKind::Data) or
        (s2cr.instCfg == InstCfg::Data and
         txn.kind == TransactionKind::Instruction))
      return finish(ContextFault{ bankIndex,
                                  ContextFaultKind::InstCfgMismatch, {} });

    if (bank.cbar != CbarType::Stage1WithStage2Bypass)
      return finish(ContextFault{ bankIndex,
                                  ContextFaultKind::InvalidContext, {} });

    // A bank with SCTLR.M clear performs no translation.
    if (not bank.enabled)
      return finish(Bypassed{ txn.va });

    if (auto it = tlb_.find(tlbKey(bankIndex, txn.va)); it != tlb_.end())
      {
        uint64_t pa = (it->second << PhysMemory::pageShift) |
                      (txn.va & (PhysMemory::pageSize - 1));
        return finish(Translated{ pa, bankIndex });
      }

    WalkObserver observer = [&] (int level, uint64_t descAddr,
                                 uint64_t desc) {
      emit("WALK cb=%u L%d desc=0x%016llx @0x%012llx", bankIndex, level,
           (unsigned long long) desc, (unsigned long long) descAddr);
    };

    WalkResult result = walk(mem, bank.walkConfig(), txn.va, observer);
    if (not result.ok())
      {
        bank.lastFault = result.fault();
        return finish(ContextFault{ bankIndex, ContextFaultKind::Walk,
                                    result.fault() });
      }

    tlb_[tlbKey(bankIndex, txn.va)] = result.pa() >> PhysMemory::pageShift;
    return finish(Translated{ result.pa(), bankIndex });
  }


  Smmu::AccessResult Smmu::access(PhysMemory& mem, const Transaction& txn)
  {
    if (txn.access == AccessType::Write and txn.payload.empty())
      throw Error("write transaction with empty payload");
    if (txn.access == AccessType::Read and txn.readLen == 0)
      throw Error("read transaction with zero length");

    AccessResult result{ translate(mem, txn), {} };
    if (auto pa = resolvedPa(result.outcome))
      {
        if (txn.access == AccessType::Write)
          mem.writeBytes(*pa, txn.payload);
        else
          result.data = mem.readBytes(*pa, txn.readLen);
      }
    return result;
  }


  void Smmu::tlbInvalidateAll()
  {
    tlb_.clear();
  }


  void Smmu::tlbInvalidateVa(unsigned bank, uint64_t va)
  {
    tlb_.erase(tlbKey(bank, va));
  }

}
