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

#include "smmusim/translation_table.hpp"

namespace smmusim
{

  namespace
  {

    constexpr uint64_t pageMask = PhysMemory::pageSize - 1;

    uint64_t inputLimit(unsigned iaBits)
    { return uint64_t(1) << iaBits; }

    uint64_t outputLimit(unsigned oaBits)
    { return oaBits >= 64 ? ~uint64_t(0) : uint64_t(1) << oaBits; }

    /// Descend to the level-3 descriptor address of va, allocating missing
    /// tables when create is set. Returns 0 when a table on the path is
    /// absent and create is false.
    uint64_t level3DescAddr(PhysMemory& mem, const WalkConfig& cfg,
                            uint64_t va, bool create)
    {
      uint64_t table = cfg.root;
      for (unsigned level = startLevel(cfg.iaBits); level < 3; ++level)
        {
          uint64_t descAddr = table + 8 * levelIndex(va, level);
          uint64_t desc = mem.readWord64(descAddr);
          if (desc & descriptor::validBit)
            table = desc & descriptor::outputMask;
          else if (create)
            {
              table = mem.allocTablePage();
              mem.writeWord64(descAddr, descriptor::makeTable(table));
            }
          else
            return 0;
        }
      return table + 8 * levelIndex(va, 3);
    }

  }


  const char* name(WalkFault::Kind kind)
  {
    switch (kind)
      {
      case WalkFault::Kind::AddressSizeFaultInput: return "AddressSizeFaultInput";
      case WalkFault::Kind::AddressSizeFaultOutput: return "AddressSizeFaultOutput";
      case WalkFault::Kind::TranslationFault: return "TranslationFault";
      }
    return "?";
  }


  void checkConfig(const WalkConfig& cfg)
  {
    if (cfg.granuleBytes != 4096)
      throw UnsupportedGranule("only the 4 KB translation granule is "
                               "supported");
    if (cfg.iaBits < 25 or cfg.iaBits > 48)
      throw Error("input address width must be in [25, 48]");
    if (cfg.oaBits != 32 and cfg.oaBits != 36 and cfg.oaBits != 40 and
        cfg.oaBits != 42 and cfg.oaBits != 44 and cfg.oaBits != 48)
      throw Error("output address width must be one of 32/36/40/42/44/48");
    if (cfg.root & pageMask)
      throw MisalignedAddress("table root must be 4 KB-aligned");
  }


  unsigned startLevel(unsigned iaBits)
  {
    if (iaBits >= 40 and iaBits <= 48)
      return 0;
    if (iaBits >= 31 and iaBits <= 39)
      return 1;
    if (iaBits >= 25 and iaBits <= 30)
      return 2;
    throw Error("input address width must be in [25, 48]");
  }


  unsigned levelIndex(uint64_t va, unsigned level)
  {
    static constexpr unsigned shifts[4] = { 39, 30, 21, 12 };
    if (level > 3)
      throw Error("walk level must be in [0, 3]");
    return unsigned((va >> shifts[level]) & 0x1ff);
  }


  void mapPage(PhysMemory& mem, const WalkConfig& cfg, uint64_t va,
               uint64_t pa)
  {
    checkConfig(cfg);
    if ((va & pageMask) or (pa & pageMask))
      throw MisalignedAddress("va and pa must be 4 KB-aligned");
    if (va >= inputLimit(cfg.iaBits))
      throw InputOutOfRange("va beyond the input address space");
    if (pa >= outputLimit(cfg.oaBits))
      throw OutputOutOfRange("pa beyond the output address space");

    uint64_t descAddr = level3DescAddr(mem, cfg, va, true);
    uint64_t existing = mem.readWord64(descAddr);
    if (existing & descriptor::validBit)
      {
        if ((existing & descriptor::outputMask) == pa)
          return;
        throw Remap("va already mapped to a different pa; unmap first");
      }
    mem.writeWord64(descAddr, descriptor::makePage(pa));
  }


  void unmapPage(PhysMemory& mem, const WalkConfig& cfg, uint64_t va)
  {
    checkConfig(cfg);
    if (va & pageMask)
      throw MisalignedAddress("va must be 4 KB-aligned");
    if (va >= inputLimit(cfg.iaBits))
      throw InputOutOfRange("va beyond the input address space");

    uint64_t descAddr = level3DescAddr(mem, cfg, va, false);
    if (descAddr == 0 or
        not (mem.readWord64(descAddr) & descriptor::validBit))
      throw NotMapped("va is not mapped");
    mem.writeWord64(descAddr, 0);
  }


  WalkResult walk(const PhysMemory& mem, const WalkConfig& cfg, uint64_t va,
                  const WalkObserver& observer)
  {
    checkConfig(cfg);

    if (va >= inputLimit(cfg.iaBits))
      return { WalkFault{ WalkFault::Kind::AddressSizeFaultInput, -1, va } };

    uint64_t table = cfg.root;
    for (unsigned level = startLevel(cfg.iaBits); level <= 3; ++level)
      {
        uint64_t descAddr = table + 8 * levelIndex(va, level);
        uint64_t desc = mem.readWord64(descAddr);
        if (observer)
          observer(int(level), descAddr, desc);

        // Blocks at levels 1-2 are never generated and walk as faults; only
        // table descriptors (levels 0-2) and page descriptors (level 3) have
        // TYPE set.
        if (not (desc & descriptor::validBit) or
            not (desc & descriptor::typeBit))
          return { WalkFault{ WalkFault::Kind::TranslationFault, int(level),
                              va } };

        table = desc & descriptor::outputMask;
      }

    uint64_t pa = table | (va & pageMask);
    if (pa >= outputLimit(cfg.oaBits))
      return { WalkFault{ WalkFault::Kind::AddressSizeFaultOutput, -1, va } };
    return { pa };
  }


  WalkConfig buildProcessTable(PhysMemory& mem, unsigned iaBits,
                               std::span<const std::pair<uint64_t, uint64_t>>
                               mappings)
  {
    WalkConfig cfg{ iaBits, 40, 0, 4096 };
    checkConfig(cfg);
    cfg.root = mem.allocTablePage();

    for (const auto& [va, pa] : mappings)
      mapPage(mem, cfg, va, pa);
    return cfg;
  }

}
