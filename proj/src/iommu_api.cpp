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

#include "smmusim/iommu_api.hpp"

#include "smmusim/translation_table.hpp"

namespace smmusim
{

  // Bank programming values observed on the modeled device: the reset
  // defaults for internally managed tables, and the TTBCR/TTBCR2 overrides
  // applied when a process table is handed over.
  namespace
  {
    constexpr uint8_t defaultT0sz = 0x10;    // 48-bit input space
    constexpr uint8_t defaultPasize = 0b101; // 48-bit output space
    constexpr uint8_t externalT0sz = 0x19;   // 39-bit input space
    constexpr uint8_t externalPasize = 0b010; // 40-bit output space
  }


  IommuDevice& IommuRegistry::registerDevice(const std::string& name,
                                             uint16_t streamId)
  {
    if (deviceIndex_.count(name))
      throw DuplicateDevice("device already registered: " + name);
    if (streamId > streamIdMask)
      throw FieldOutOfRange("stream id must fit in 15 bits");

    unsigned groupId = unsigned(groups_.size());
    groups_.push_back(IommuGroup{ groupId, { name }, {} });

    deviceIndex_[name] = devices_.size();
    devices_.push_back(IommuDevice{ name, streamId, groupId, {} });
    return devices_.back();
  }


  IommuDomain& IommuRegistry::domainAlloc()
  {
    IommuDomain dom;
    dom.id = unsigned(domains_.size());
    domains_.push_back(std::move(dom));
    return domains_.back();
  }


  IommuDevice& IommuRegistry::device(const std::string& name)
  {
    auto it = deviceIndex_.find(name);
    if (it == deviceIndex_.end())
      throw UnknownEntity("no such device: " + name);
    return devices_[it->second];
  }


  const IommuDevice& IommuRegistry::device(const std::string& name) const
  {
    auto it = deviceIndex_.find(name);
    if (it == deviceIndex_.end())
      throw UnknownEntity("no such device: " + name);
    return devices_[it->second];
  }


  IommuGroup& IommuRegistry::group(unsigned id)
  {
    if (id >= groups_.size())
      throw UnknownEntity("no such group: " + std::to_string(id));
    return groups_[id];
  }


  IommuDomain& IommuRegistry::domain(unsigned id)
  {
    if (id >= domains_.size())
      throw UnknownEntity("no such domain: " + std::to_string(id));
    return domains_[id];
  }


  void IommuRegistry::attachGroup(Smmu& smmu, PhysMemory& mem,
                                  unsigned domainId, unsigned groupId,
                                  InstCfg instCfg,
                                  bool applyExternalOverrides)
  {
    IommuGroup& grp = group(groupId);
    if (grp.attachedDomain)
      throw GroupBusy("group " + std::to_string(groupId) +
                      " is already attached");
    IommuDomain& dom = domain(domainId);

    if (not dom.bank)
      {
        unsigned bank = smmu.banks().allocate();
        dom.bank = bank;
        if (dom.ttbr == 0)
          {
            uint64_t root = mem.allocTablePage();
            smmu.banks().program(bank, root, defaultT0sz, defaultPasize);
            dom.internalCfg = smmu.banks().bank(bank).walkConfig();
          }
        else if (applyExternalOverrides)
          smmu.banks().program(bank, dom.ttbr, externalT0sz, externalPasize);
        else
          smmu.banks().program(bank, dom.ttbr, defaultT0sz, defaultPasize);
        smmu.banks().enable(bank);
      }

    for (const std::string& name : grp.members)
      {
        IommuDevice& dev = device(name);
        auto entry = smmu.streamMap().lowestFreeEntry();
        if (not entry)
          throw NoFreeStreamEntry("all 48 stream-map entries are in use");
        smmu.streamMap().program(*entry,
                                 Smr{ true, 0, dev.streamId },
                                 S2cr{ S2crType::Translation,
                                       uint8_t(*dom.bank), instCfg });
        dev.streamEntry = *entry;
      }

    grp.attachedDomain = domainId;
    ++dom.attachedGroups;
    smmu.tlbInvalidateAll();
  }


  void IommuRegistry::detachGroup(Smmu& smmu, unsigned domainId,
                                  unsigned groupId)
  {
    IommuGroup& grp = group(groupId);
    IommuDomain& dom = domain(domainId);
    if (grp.attachedDomain != domainId)
      throw NotAttached("group " + std::to_string(groupId) +
                        " is not attached to domain " +
                        std::to_string(domainId));

    for (const std::string& name : grp.members)
      {
        IommuDevice& dev = device(name);
        if (dev.streamEntry)
          {
            smmu.streamMap().program(*dev.streamEntry, Smr{}, S2cr{});
            dev.streamEntry.reset();
          }
      }

    grp.attachedDomain.reset();
    --dom.attachedGroups;
    if (dom.attachedGroups == 0 and dom.bank)
      {
        smmu.banks().release(*dom.bank);
        dom.bank.reset();
        dom.internalCfg.reset();
      }
    smmu.tlbInvalidateAll();
  }


  void IommuRegistry::iommuMap(PhysMemory& mem, unsigned domainId,
                               uint64_t va, uint64_t pa, uint64_t size,
                               uint64_t flags)
  {
    IommuDomain& dom = domain(domainId);
    if (dom.ttbr != 0)
      throw ExternalTableReadOnly("domain uses an external table");
    if (not dom.bank or not dom.internalCfg)
      throw NotAttached("domain has no programmed context bank");
    if (size == 0 or size % PhysMemory::pageSize != 0)
      throw MisalignedAddress("size must be a positive multiple of 4096");

    for (uint64_t offset = 0; offset < size; offset += PhysMemory::pageSize)
      mapPage(mem, *dom.internalCfg, va + offset, pa + offset);
    dom.lastMapFlags = flags;
  }


  void IommuRegistry::setExternalTable(unsigned domainId, uint64_t root)
  {
    IommuDomain& dom = domain(domainId);
    if (dom.bank)
      throw AlreadyAttached("external table must be set before attach");
    dom.ttbr = root;
  }


  void IommuRegistry::clear()
  {
    devices_.clear();
    deviceIndex_.clear();
    groups_.clear();
    domains_.clear();
  }

}
