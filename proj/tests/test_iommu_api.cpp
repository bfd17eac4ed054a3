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

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "smmusim/dts_config.hpp"
#include "smmusim/iommu_api.hpp"
#include "smmusim/translation_table.hpp"

using namespace smmusim;

namespace
{

  std::string readFile(const std::string& path)
  {
    std::ifstream in(path);
    REQUIRE_MESSAGE(bool(in), "cannot open ", path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  struct Rig
  {
    PhysMemory mem;
    Smmu smmu;
    IommuRegistry registry;
  };

}

TEST_SUITE_BEGIN("iommu_api");

TEST_CASE("every registered device gets its own group")
{
  IommuRegistry registry;
  IommuDevice& dev = registry.registerDevice("dma1chan0", 0x14e8);
  CHECK(registry.group(dev.groupId).members ==
        std::vector<std::string>{ "dma1chan0" });
  CHECK(registry.groupCount() == 1);

  CHECK_THROWS_AS(registry.registerDevice("dma1chan0", 0x14e8),
                  DuplicateDevice);

  std::set<unsigned> groupIds{ dev.groupId };
  for (int i = 0; i < 99; ++i)
    {
      IommuDevice& d = registry.registerDevice("dev" + std::to_string(i),
                                               uint16_t(i));
      CHECK(groupIds.insert(d.groupId).second);
    }
  CHECK(groupIds.size() == 100);
}

TEST_CASE("the masters of the smmu fixture register as 26 groups")
{
  DtsNode root = parseDts(readFile(std::string(SMMUSIM_FIXTURE_DIR) +
                                   "/zynqmp_smmu.dts"));
  MasterResolution resolution = resolveMasters(root);
  REQUIRE(resolution.bindings.size() == 26);

  IommuRegistry registry;
  for (const MasterBinding& binding : resolution.bindings)
    registry.registerDevice(root.findByPhandle(binding.devicePhandle)->name,
                            binding.streamId);
  CHECK(registry.deviceCount() == 26);
  CHECK(registry.groupCount() == 26);
  CHECK(registry.device("dma@fd500000").streamId == 0x14e8);
}

TEST_CASE("domain allocation is cheap and bankless")
{
  Rig rig;
  IommuDomain& d0 = rig.registry.domainAlloc();
  IommuDomain& d1 = rig.registry.domainAlloc();
  CHECK(d0.ttbr == 0);
  CHECK(d0.id != d1.id);
  CHECK(not d0.bank);
  CHECK(rig.smmu.banks().allocatedCount() == 0);
}

TEST_CASE("attach on the default path programs a 48/48 bank")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& dom = rig.registry.domainAlloc();

  uint64_t cursorBefore = rig.mem.allocCursor();
  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId);

  REQUIRE(dom.bank.has_value());
  const ContextBank& bank = rig.smmu.banks().bank(*dom.bank);
  CHECK(bank.enabled);
  CHECK(bank.t0sz == 0x10);
  CHECK(bank.pasize == 0b101);
  CHECK(bank.iaBits() == 48);
  CHECK(bank.oaBits() == 48);
  CHECK(bank.ttbr0 == cursorBefore);   // freshly allocated root

  MatchResult hit = rig.smmu.streamMap().matchStream(0x14e8);
  REQUIRE(hit.kind == MatchResult::Kind::Matched);
  CHECK(rig.smmu.streamMap().smr(hit.index).mask == 0);
  CHECK(rig.smmu.streamMap().s2cr(hit.index).type == S2crType::Translation);
  CHECK(rig.smmu.streamMap().s2cr(hit.index).cbndx == *dom.bank);
  CHECK(rig.smmu.streamMap().s2cr(hit.index).instCfg == InstCfg::Data);

  // Exactly one valid entry exists for the single attached device.
  unsigned valid = 0;
  for (unsigned n = 0; n < streamMapEntries; ++n)
    valid += rig.smmu.streamMap().smr(n).valid;
  CHECK(valid == 1);
}

TEST_CASE("attach with an external root applies the size overrides")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("pl-ip", 0x200);
  IommuDomain& dom = rig.registry.domainAlloc();

  std::vector<std::pair<uint64_t, uint64_t>> mappings{
    { 0x7f'8000'1000, 0x6000'4000 }
  };
  WalkConfig table = buildProcessTable(rig.mem, 39, mappings);
  rig.registry.setExternalTable(dom.id, table.root);

  uint64_t cursorBefore = rig.mem.allocCursor();
  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId);
  CHECK(rig.mem.allocCursor() == cursorBefore);  // no internal table

  const ContextBank& bank = rig.smmu.banks().bank(*dom.bank);
  CHECK(bank.ttbr0 == table.root);
  CHECK(bank.t0sz == 0x19);
  CHECK(bank.pasize == 0b010);
  CHECK(bank.iaBits() == 39);
  CHECK(bank.oaBits() == 40);
}

TEST_CASE("suppressing the overrides keeps the default geometry")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("pl-ip", 0x200);
  IommuDomain& dom = rig.registry.domainAlloc();
  WalkConfig table = buildProcessTable(rig.mem, 39, {});
  rig.registry.setExternalTable(dom.id, table.root);

  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId,
                           InstCfg::Data, false);
  const ContextBank& bank = rig.smmu.banks().bank(*dom.bank);
  CHECK(bank.ttbr0 == table.root);
  CHECK(bank.t0sz == 0x10);
  CHECK(bank.pasize == 0b101);
}

TEST_CASE("attach can program the instruction restriction")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("pl-ip", 0x200);
  IommuDomain& dom = rig.registry.domainAlloc();
  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId,
                           InstCfg::Instruction);
  MatchResult hit = rig.smmu.streamMap().matchStream(0x200);
  CHECK(rig.smmu.streamMap().s2cr(hit.index).instCfg ==
        InstCfg::Instruction);
}

TEST_CASE("a group attaches to one domain at a time")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& d0 = rig.registry.domainAlloc();
  IommuDomain& d1 = rig.registry.domainAlloc();

  rig.registry.attachGroup(rig.smmu, rig.mem, d0.id, dev.groupId);
  CHECK_THROWS_AS(rig.registry.attachGroup(rig.smmu, rig.mem, d1.id,
                                           dev.groupId), GroupBusy);
}

TEST_CASE("detach clears entries and frees the bank")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& dom = rig.registry.domainAlloc();

  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId);
  CHECK(rig.smmu.banks().allocatedCount() == 1);

  rig.registry.detachGroup(rig.smmu, dom.id, dev.groupId);
  CHECK(rig.smmu.banks().allocatedCount() == 0);
  CHECK(rig.smmu.streamMap().matchStream(0x14e8).kind ==
        MatchResult::Kind::NoMatch);
  CHECK(not dom.bank);

  CHECK_THROWS_AS(rig.registry.detachGroup(rig.smmu, dom.id, dev.groupId),
                  NotAttached);
}

TEST_CASE("one domain shares its bank across groups")
{
  Rig rig;
  IommuDevice& a = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDevice& b = rig.registry.registerDevice("dma2chan0", 0x14e9);
  IommuDomain& dom = rig.registry.domainAlloc();

  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, a.groupId);
  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, b.groupId);
  CHECK(rig.smmu.banks().allocatedCount() == 1);
  CHECK(rig.smmu.streamMap().matchStream(0x14e8).kind ==
        MatchResult::Kind::Matched);
  CHECK(rig.smmu.streamMap().matchStream(0x14e9).kind ==
        MatchResult::Kind::Matched);

  rig.registry.detachGroup(rig.smmu, dom.id, a.groupId);
  CHECK(rig.smmu.banks().allocatedCount() == 1);
  rig.registry.detachGroup(rig.smmu, dom.id, b.groupId);
  CHECK(rig.smmu.banks().allocatedCount() == 0);
}

TEST_CASE("mapping installs pages under the domain's bank")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& dom = rig.registry.domainAlloc();
  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId);

  rig.registry.iommuMap(rig.mem, dom.id, 0x7000'0000, 0x6000'0000, 4096, 3);
  rig.registry.iommuMap(rig.mem, dom.id, 0x7000'2000, 0x6000'2000, 8192, 3);

  WalkConfig cfg = rig.smmu.banks().bank(*dom.bank).walkConfig();
  CHECK(walk(rig.mem, cfg, 0x7000'0000).pa() == 0x6000'0000);
  CHECK(walk(rig.mem, cfg, 0x7000'2000).pa() == 0x6000'2000);
  CHECK(walk(rig.mem, cfg, 0x7000'3000).pa() == 0x6000'3000);  // second page
  CHECK(not walk(rig.mem, cfg, 0x7000'4000).ok());
}

TEST_CASE("mapping preconditions")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& dom = rig.registry.domainAlloc();

  CHECK_THROWS_AS(rig.registry.iommuMap(rig.mem, dom.id, 0x7000'0000,
                                        0x6000'0000, 4096, 0), NotAttached);

  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId);
  CHECK_THROWS_AS(rig.registry.iommuMap(rig.mem, dom.id, 0x7000'0000,
                                        0x6000'0000, 100, 0),
                  MisalignedAddress);
  CHECK_THROWS_AS(rig.registry.iommuMap(rig.mem, dom.id, 0x7000'0000,
                                        0x6000'0000, 0, 0),
                  MisalignedAddress);

  IommuDomain& ext = rig.registry.domainAlloc();
  rig.registry.setExternalTable(ext.id, 0x9000'0000);
  IommuDevice& dev2 = rig.registry.registerDevice("pl-ip", 0x200);
  rig.registry.attachGroup(rig.smmu, rig.mem, ext.id, dev2.groupId);
  CHECK_THROWS_AS(rig.registry.iommuMap(rig.mem, ext.id, 0x7000'0000,
                                        0x6000'0000, 4096, 0),
                  ExternalTableReadOnly);
}

TEST_CASE("external table override must precede attach")
{
  Rig rig;
  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& dom = rig.registry.domainAlloc();
  rig.registry.attachGroup(rig.smmu, rig.mem, dom.id, dev.groupId);
  CHECK_THROWS_AS(rig.registry.setExternalTable(dom.id, 0x9000'0000),
                  AlreadyAttached);

  IommuDomain& other = rig.registry.domainAlloc();
  rig.registry.setExternalTable(other.id, 0x9000'0000);
  rig.registry.setExternalTable(other.id, 0);   // back to the default path
  CHECK(other.ttbr == 0);
}

TEST_CASE("bank exhaustion across domains")
{
  Rig rig;
  for (int i = 0; i < 17; ++i)
    rig.registry.registerDevice("dev" + std::to_string(i), uint16_t(i));

  for (int i = 0; i < 16; ++i)
    {
      IommuDomain& dom = rig.registry.domainAlloc();
      rig.registry.attachGroup(rig.smmu, rig.mem, dom.id,
                               rig.registry.device("dev" +
                                                   std::to_string(i)).groupId);
    }
  IommuDomain& extra = rig.registry.domainAlloc();
  CHECK_THROWS_AS(rig.registry.attachGroup(rig.smmu, rig.mem, extra.id,
                                           rig.registry.device("dev16").groupId),
                  NoFreeBank);
}

TEST_CASE("stream-map exhaustion")
{
  Rig rig;
  for (unsigned n = 0; n < streamMapEntries; ++n)
    rig.smmu.streamMap().program(n, Smr{ true, 0, uint16_t(n) }, S2cr{});

  IommuDevice& dev = rig.registry.registerDevice("dma1chan0", 0x14e8);
  IommuDomain& dom = rig.registry.domainAlloc();
  CHECK_THROWS_AS(rig.registry.attachGroup(rig.smmu, rig.mem, dom.id,
                                           dev.groupId), NoFreeStreamEntry);
}

TEST_CASE("bank accounting matches attached-domain count")
{
  Rig rig;
  constexpr int devices = 12;
  for (int i = 0; i < devices; ++i)
    rig.registry.registerDevice("dev" + std::to_string(i), uint16_t(i));

  std::vector<unsigned> domains;
  for (int i = 0; i < devices; ++i)
    domains.push_back(rig.registry.domainAlloc().id);

  std::mt19937_64 rng(11);
  std::set<int> attached;
  for (int step = 0; step < 400; ++step)
    {
      int pick = int(rng() % devices);
      unsigned groupId =
        rig.registry.device("dev" + std::to_string(pick)).groupId;
      if (attached.count(pick))
        {
          rig.registry.detachGroup(rig.smmu, domains[pick], groupId);
          attached.erase(pick);
        }
      else
        {
          rig.registry.attachGroup(rig.smmu, rig.mem, domains[pick], groupId);
          attached.insert(pick);
        }
      CHECK(rig.smmu.banks().allocatedCount() == attached.size());
    }
}

TEST_SUITE_END();
