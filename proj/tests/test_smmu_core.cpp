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

#include "doctest.h"

#include <random>

#include "smmusim/smmu.hpp"
#include "smmusim/translation_table.hpp"

using namespace smmusim;

namespace
{

  /// One stream (id 0x200) routed to an enabled 48/48 bank with a single
  /// page mapped, plus a trace capture.
  struct Rig
  {
    PhysMemory mem;
    Smmu smmu;
    std::vector<std::string> trace;
    unsigned bank = 0;

    explicit Rig(InstCfg instCfg = InstCfg::Default)
    {
      smmu.setTraceSink([this] (std::string_view line) {
        trace.emplace_back(line);
      });

      bank = smmu.banks().allocate();
      smmu.banks().program(bank, mem.allocTablePage(), 0x10, 0b101);
      smmu.banks().enable(bank);
      smmu.streamMap().program(0, Smr{ true, 0, 0x200 },
                               S2cr{ S2crType::Translation, uint8_t(bank),
                                     instCfg });
      mapPage(mem, smmu.banks().bank(bank).walkConfig(), 0x7000'2000,
              0x6000'2000);
    }

    Transaction write32(uint16_t sid, uint64_t va, uint32_t word)
    {
      Transaction txn;
      txn.streamId = sid;
      txn.va = va;
      txn.access = AccessType::Write;
      txn.payload = { uint8_t(word), uint8_t(word >> 8), uint8_t(word >> 16),
                      uint8_t(word >> 24) };
      return txn;
    }

    Transaction read4(uint16_t sid, uint64_t va)
    {
      Transaction txn;
      txn.streamId = sid;
      txn.va = va;
      txn.access = AccessType::Read;
      txn.readLen = 4;
      return txn;
    }

    size_t countEvents(std::string_view tag) const
    {
      size_t n = 0;
      for (const std::string& line : trace)
        if (line.find(tag) != std::string::npos)
          ++n;
      return n;
    }
  };

}

TEST_SUITE_BEGIN("smmu_core");

TEST_CASE("matched stream translates through its bank")
{
  Rig rig;
  Outcome outcome = rig.smmu.translate(rig.mem,
                                       rig.write32(0x200, 0x7000'2000,
                                                   0xcafebeef));
  auto* t = std::get_if<Translated>(&outcome);
  REQUIRE(t);
  CHECK(t->pa == 0x6000'2000);
  CHECK(t->bank == 0);
}

TEST_CASE("trace lines follow the documented format")
{
  Rig rig;
  rig.smmu.translate(rig.mem, rig.write32(0x200, 0x7000'2000, 0xcafebeef));

  REQUIRE(rig.trace.size() == 8);   // TXN SEC MATCH WALKx4 OUT
  CHECK(rig.trace[0] == "EVT 1 TXN sid=0x0200 va=0x000070002000 kind=D acc=W");
  CHECK(rig.trace[1] == "EVT 2 SEC NS");
  CHECK(rig.trace[2] == "EVT 3 MATCH idx=0");
  CHECK(rig.trace[3].starts_with("EVT 4 WALK cb=0 L0 desc=0x"));
  CHECK(rig.trace[6].starts_with("EVT 7 WALK cb=0 L3 desc=0x"));
  CHECK(rig.trace[7] == "EVT 8 OUT XLATE pa=0x000060002000");
}

TEST_CASE("page offset is carried through")
{
  Rig rig;
  Outcome outcome = rig.smmu.translate(rig.mem,
                                       rig.read4(0x200, 0x7000'2123));
  CHECK(std::get<Translated>(outcome).pa == 0x6000'2123);
}

TEST_CASE("a globally disabled smmu bypasses everything")
{
  Rig rig;
  rig.smmu.setGlobalEnable(false);
  Outcome outcome = rig.smmu.translate(rig.mem,
                                       rig.write32(0x200, 0x7000'2000, 1));
  CHECK(std::get<Bypassed>(outcome).pa == 0x7000'2000);
  CHECK(rig.countEvents("MATCH") == 0);   // pipeline stopped at stage one
}

TEST_CASE("unmapped address faults in the bank and is recorded")
{
  Rig rig;
  Outcome outcome = rig.smmu.translate(rig.mem,
                                       rig.read4(0x200, 0x7100'0000));
  auto* cf = std::get_if<ContextFault>(&outcome);
  REQUIRE(cf);
  CHECK(cf->bank == 0);
  CHECK(cf->kind == ContextFaultKind::Walk);
  CHECK(cf->walkFault->kind == WalkFault::Kind::TranslationFault);

  REQUIRE(rig.smmu.banks().bank(0).lastFault.has_value());
  CHECK(rig.smmu.banks().bank(0).lastFault->va == 0x7100'0000);
}

TEST_CASE("unmatched stream follows the configured policy")
{
  Rig rig;
  CHECK(rig.smmu.unmatchedPolicy() == UnmatchedPolicy::Bypass);
  Outcome bypass = rig.smmu.translate(rig.mem, rig.read4(0x201, 0x1000));
  CHECK(std::get<Bypassed>(bypass).pa == 0x1000);

  rig.smmu.setUnmatchedPolicy(UnmatchedPolicy::Fault);
  Outcome fault = rig.smmu.translate(rig.mem, rig.read4(0x201, 0x1000));
  auto* gf = std::get_if<GlobalFault>(&fault);
  REQUIRE(gf);
  CHECK(gf->reason == GlobalFaultReason::UnmatchedStream);
}

TEST_CASE("multiple matches fault deterministically")
{
  Rig rig;
  rig.smmu.streamMap().program(1, Smr{ true, 0x3ff, 0 }, S2cr{});
  Outcome outcome = rig.smmu.translate(rig.mem, rig.read4(0x200, 0x1000));
  CHECK(std::get<GlobalFault>(outcome).reason ==
        GlobalFaultReason::MultipleMatch);
  CHECK(rig.countEvents("MATCH MULTI[0,1]") == 1);
}

TEST_CASE("stream-level bypass and fault contexts")
{
  Rig rig;
  rig.smmu.streamMap().program(0, Smr{ true, 0, 0x200 },
                               S2cr{ S2crType::Bypass, 0,
                                     InstCfg::Default });
  Outcome bypass = rig.smmu.translate(rig.mem, rig.read4(0x200, 0x5000));
  CHECK(std::get<Bypassed>(bypass).pa == 0x5000);

  for (S2crType type : { S2crType::Fault, S2crType::Reserved })
    {
      rig.smmu.streamMap().program(0, Smr{ true, 0, 0x200 },
                                   S2cr{ type, 0, InstCfg::Default });
      Outcome fault = rig.smmu.translate(rig.mem, rig.read4(0x200, 0x5000));
      CHECK(std::get<GlobalFault>(fault).reason ==
            GlobalFaultReason::StreamFaultContext);
    }
}

TEST_CASE("instruction/data restriction faults both ways")
{
  Rig instr(InstCfg::Instruction);
  Transaction data = instr.write32(0x200, 0x7000'2000, 1);
  Outcome outcome = instr.smmu.translate(instr.mem, data);
  auto* cf = std::get_if<ContextFault>(&outcome);
  REQUIRE(cf);
  CHECK(cf->kind == ContextFaultKind::InstCfgMismatch);

  Transaction instrTxn = data;
  instrTxn.kind = TransactionKind::Instruction;
  CHECK(std::holds_alternative<Translated>(
          instr.smmu.translate(instr.mem, instrTxn)));

  Rig dataRig(InstCfg::Data);
  Transaction wrongKind = dataRig.read4(0x200, 0x7000'2000);
  wrongKind.kind = TransactionKind::Instruction;
  Outcome outcome2 = dataRig.smmu.translate(dataRig.mem, wrongKind);
  CHECK(std::get<ContextFault>(outcome2).kind ==
        ContextFaultKind::InstCfgMismatch);
}

TEST_CASE("non-operative cbar types raise invalid-context faults")
{
  for (CbarType type : { CbarType::Stage2, CbarType::Stage1WithStage2Fault,
                         CbarType::Stage1ThenStage2 })
    {
      Rig rig;
      rig.smmu.banks().bank(0).cbar = type;
      Outcome outcome = rig.smmu.translate(rig.mem,
                                           rig.read4(0x200, 0x7000'2000));
      CHECK(std::get<ContextFault>(outcome).kind ==
            ContextFaultKind::InvalidContext);
    }
}

TEST_CASE("a disabled bank bypasses instead of walking")
{
  Rig rig;
  rig.smmu.banks().enable(0, false);
  Outcome outcome = rig.smmu.translate(rig.mem,
                                       rig.read4(0x200, 0x7000'2000));
  CHECK(std::get<Bypassed>(outcome).pa == 0x7000'2000);
  CHECK(rig.countEvents("WALK") == 0);
}

TEST_CASE("stream resolution precedes bank state")
{
  // A transaction that is unmatched and whose would-be bank would fault
  // must report the stream-level outcome.
  Rig rig;
  rig.smmu.setUnmatchedPolicy(UnmatchedPolicy::Fault);
  rig.smmu.banks().bank(0).cbar = CbarType::Stage2;
  Outcome outcome = rig.smmu.translate(rig.mem, rig.read4(0x201, 0x1000));
  CHECK(std::get<GlobalFault>(outcome).reason ==
        GlobalFaultReason::UnmatchedStream);

  // Matched fault-context entry beats the disabled bank behind it.
  rig.smmu.streamMap().program(0, Smr{ true, 0, 0x200 },
                               S2cr{ S2crType::Fault, 0, InstCfg::Default });
  rig.smmu.banks().enable(0, false);
  Outcome fault = rig.smmu.translate(rig.mem, rig.read4(0x200, 0x1000));
  CHECK(std::get<GlobalFault>(fault).reason ==
        GlobalFaultReason::StreamFaultContext);
}

TEST_CASE("the TLB short-circuits repeated walks")
{
  Rig rig;
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(rig.countEvents("WALK") == 4);
  CHECK(rig.smmu.tlbSize() == 1);

  rig.trace.clear();
  Outcome outcome = rig.smmu.translate(rig.mem,
                                       rig.read4(0x200, 0x7000'2a00));
  CHECK(std::get<Translated>(outcome).pa == 0x6000'2a00);
  CHECK(rig.countEvents("WALK") == 0);

  rig.smmu.tlbInvalidateAll();
  rig.trace.clear();
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(rig.countEvents("WALK") == 4);
}

TEST_CASE("faulting walks are not cached")
{
  Rig rig;
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7100'0000));
  CHECK(rig.smmu.tlbSize() == 0);
}

TEST_CASE("a rewritten descriptor stays stale until invalidation")
{
  Rig rig;
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));

  // Locate and rewrite the level-3 descriptor from the walk trace, then
  // re-point the page at 0x60004000.
  WalkConfig cfg = rig.smmu.banks().bank(0).walkConfig();
  uint64_t descAddr = 0;
  walk(rig.mem, cfg, 0x7000'2000,
       [&] (int level, uint64_t addr, uint64_t) {
         if (level == 3)
           descAddr = addr;
       });
  REQUIRE(descAddr != 0);
  rig.mem.writeWord64(descAddr, descriptor::makePage(0x6000'4000));

  Outcome stale = rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(std::get<Translated>(stale).pa == 0x6000'2000);

  rig.smmu.tlbInvalidateAll();
  Outcome fresh = rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(std::get<Translated>(fresh).pa == 0x6000'4000);
}

TEST_CASE("invalidating one page leaves its sibling cached")
{
  Rig rig;
  mapPage(rig.mem, rig.smmu.banks().bank(0).walkConfig(), 0x7000'3000,
          0x6000'3000);
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'3000));
  CHECK(rig.smmu.tlbSize() == 2);

  rig.smmu.tlbInvalidateVa(0, 0x7000'2000);
  CHECK(rig.smmu.tlbSize() == 1);

  rig.trace.clear();
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'3000));
  CHECK(rig.countEvents("WALK") == 0);   // sibling still cached
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(rig.countEvents("WALK") == 4);   // invalidated page re-walks
}

TEST_CASE("the TLB is transparent while tables are unchanged")
{
  Rig cached;
  Rig uncached;
  std::mt19937_64 rng(10);

  for (int i = 0; i < 500; ++i)
    {
      uint64_t va = (rng() % 2) ? 0x7000'2000 + (rng() & 0xfff)
                                : (rng() & 0xffff'ffff'ffff);
      uncached.smmu.tlbInvalidateAll();
      Outcome a = cached.smmu.translate(cached.mem,
                                        cached.read4(0x200, va));
      Outcome b = uncached.smmu.translate(uncached.mem,
                                          uncached.read4(0x200, va));
      CHECK(describe(a) == describe(b));
    }
}

TEST_CASE("faulted accesses leave memory untouched")
{
  Rig rig;
  rig.smmu.setUnmatchedPolicy(UnmatchedPolicy::Fault);
  uint64_t before = rig.mem.contentHash();

  auto unmatched = rig.smmu.access(rig.mem,
                                   rig.write32(0x201, 0x1000, 0xdead));
  CHECK(isFault(unmatched.outcome));
  auto walkFault = rig.smmu.access(rig.mem,
                                   rig.write32(0x200, 0x7100'0000, 0xdead));
  CHECK(isFault(walkFault.outcome));

  CHECK(rig.mem.contentHash() == before);
}

TEST_CASE("access performs the transfer at the resolved address")
{
  Rig rig;
  rig.smmu.access(rig.mem, rig.write32(0x200, 0x7000'2000, 0xcafebeef));
  CHECK(rig.mem.readWord32(0x6000'2000) == 0xcafebeef);

  auto result = rig.smmu.access(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(result.data == std::vector<uint8_t>{ 0xef, 0xbe, 0xfe, 0xca });

  // Bypassed writes land at pa = va.
  rig.smmu.access(rig.mem, rig.write32(0x201, 0x6000'8000, 0x1234));
  CHECK(rig.mem.readWord32(0x6000'8000) == 0x1234);
}

TEST_CASE("end-to-end offset preservation")
{
  Rig rig;
  for (uint64_t k : { 0ull, 4ull, 0x7fcull, 0xffcull })
    {
      rig.smmu.access(rig.mem,
                      rig.write32(0x200, 0x7000'2000 + k,
                                  uint32_t(0x1000 + k)));
      CHECK(rig.mem.readWord32(0x6000'2000 + k) == uint32_t(0x1000 + k));
    }
}

TEST_CASE("degenerate transactions are caller errors")
{
  Rig rig;
  Transaction emptyWrite;
  emptyWrite.streamId = 0x200;
  emptyWrite.va = 0x7000'2000;
  emptyWrite.access = AccessType::Write;
  CHECK_THROWS_AS(rig.smmu.access(rig.mem, emptyWrite), Error);

  Transaction emptyRead = rig.read4(0x200, 0x7000'2000);
  emptyRead.readLen = 0;
  CHECK_THROWS_AS(rig.smmu.access(rig.mem, emptyRead), Error);
}

TEST_CASE("trace sink can be swapped and dropped")
{
  Rig rig;
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  size_t firstRun = rig.trace.size();
  CHECK(firstRun > 0);

  rig.smmu.setTraceSink({});
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(rig.trace.size() == firstRun);

  std::vector<std::string> other;
  rig.smmu.setTraceSink([&] (std::string_view line) {
    other.emplace_back(line);
  });
  rig.smmu.translate(rig.mem, rig.read4(0x200, 0x7000'2000));
  CHECK(not other.empty());
}

TEST_SUITE_END();
