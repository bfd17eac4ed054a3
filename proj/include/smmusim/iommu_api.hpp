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
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "smmusim/smmu.hpp"

namespace smmusim
{

  /// A registered SMMU master. Every device lives in exactly one group and
  /// remembers the stream-map entry programmed for it while attached.
  struct IommuDevice
  {
    std::string name;
    uint16_t streamId = 0;
    unsigned groupId = 0;
    std::optional<unsigned> streamEntry;
  };

  /// The attach/detach working unit. Devices land in singleton groups on
  /// registration.
  struct IommuGroup
  {
    unsigned id = 0;
    std::vector<std::string> members;
    std::optional<unsigned> attachedDomain;
  };

  /// A translation domain. A ttbr of zero means the domain owns an
  /// internally allocated table; a nonzero ttbr points at an externally
  /// built table (a process pgd) that attach hands to the context bank.
  struct IommuDomain
  {
    unsigned id = 0;
    uint64_t ttbr = 0;
    std::optional<unsigned> bank;
    std::optional<WalkConfig> internalCfg;
    unsigned attachedGroups = 0;
    uint64_t lastMapFlags = 0;
  };

  /// Devices, groups and domains plus the operations tying them to the SMMU:
  /// group attach programs a context bank and one stream-map entry per
  /// member device; iommuMap installs pages in a domain's internal table.
  class IommuRegistry
  {
  public:

    /// Register a device under a unique name; it gets a fresh singleton
    /// group.
    IommuDevice& registerDevice(const std::string& name, uint16_t streamId);

    /// Allocate a domain with ttbr = 0 and no context bank.
    IommuDomain& domainAlloc();

    IommuDevice& device(const std::string& name);
    const IommuDevice& device(const std::string& name) const;
    IommuGroup& group(unsigned id);
    IommuDomain& domain(unsigned id);

    size_t deviceCount() const
    { return devices_.size(); }

    size_t groupCount() const
    { return groups_.size(); }

    size_t domainCount() const
    { return domains_.size(); }

    /// Attach a group to a domain. The first attach allocates and programs a
    /// context bank: the default path gets a fresh internal table with
    /// T0SZ 0x10 / PASize 0b101 (48-bit in, 48-bit out); a domain carrying
    /// an external ttbr gets that root with the T0SZ 0x19 / PASize 0b010
    /// overrides (39-bit in, 40-bit out). Each member device takes the
    /// lowest free stream-map entry. Finishes with a TLB invalidate.
    ///
    /// applyExternalOverrides=false reproduces the unpatched driver: the
    /// external root is handed over but the bank keeps the default address
    /// sizes.
    void attachGroup(Smmu& smmu, PhysMemory& mem, unsigned domainId,
                     unsigned groupId, InstCfg instCfg = InstCfg::Data,
                     bool applyExternalOverrides = true);

    /// Invalidate the group's stream-map entries; release the bank once the
    /// domain has no attached groups left.
    void detachGroup(Smmu& smmu, unsigned domainId, unsigned groupId);

    /// Map size/4096 consecutive pages in the domain's internal table.
    /// Domains with an external ttbr are read-only from here.
    void iommuMap(PhysMemory& mem, unsigned domainId, uint64_t va,
                  uint64_t pa, uint64_t size, uint64_t flags);

    /// Hand an externally built table root to a not-yet-attached domain.
    /// Zero restores the internal-table path.
    void setExternalTable(unsigned domainId, uint64_t root);

    /// Forget all devices, groups and domains.
    void clear();

  private:

    std::deque<IommuDevice> devices_;
    std::unordered_map<std::string, size_t> deviceIndex_;
    std::deque<IommuGroup> groups_;
    std::deque<IommuDomain> domains_;
  };

}
