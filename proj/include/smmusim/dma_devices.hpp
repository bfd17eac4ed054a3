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
#include <optional>
#include <string>
#include <vector>

#include "smmusim/smmu.hpp"

namespace smmusim
{

  enum class PowerDomain : uint8_t { LPD, FPD };

  /// One PS DMA channel. The full-power-domain controller has a 128-bit AXI
  /// bus, the low-power-domain one 64 bits; both are 8-channel.
  struct DmaChannel
  {
    std::string name;
    uint64_t base = 0;
    PowerDomain powerDomain = PowerDomain::FPD;
    unsigned busWidthBits = 128;
    uint16_t streamId = 0;
    bool enabled = true;
  };

  /// The 16 PS channels with their register bases and default stream ids:
  /// dma1chan0..dma8chan0 on the FPD controller at 0xfd500000, stream ids
  /// from 0x14e8; dma9chan0..dma16chan0 on the LPD controller at 0xffa80000,
  /// stream ids from 0x868.
  std::vector<DmaChannel> standardChannels();

  /// Per-chunk outcomes of one transfer. A fault aborts the transfer with
  /// the progress so far recorded.
  struct TransferReport
  {
    std::vector<Outcome> outcomes;
    uint64_t bytesCopied = 0;
    bool completed = false;

    const Outcome* lastOutcome() const
    { return outcomes.empty() ? nullptr : &outcomes.back(); }
  };

  /// Copy len bytes from src to dst through the SMMU, splitting both ranges
  /// at 4 KB boundaries. Every chunk is one read transaction followed by one
  /// write transaction carrying the bytes read.
  TransferReport dmaTransfer(Smmu& smmu, PhysMemory& mem,
                             const DmaChannel& channel, uint64_t src,
                             uint64_t dst, uint64_t len);

  enum class PlPort : uint8_t { HPC0, HPC1 };

  /// Master-port code contributed to the StreamID: HPC0 is 0x8 (so AXI ID 0
  /// yields stream id 0x200); HPC1 is the adjacent code 0x9.
  uint8_t portCode(PlPort port);

  /// The DMA-like IP block in the PL: six 32-bit registers and no source
  /// address. Writing 1 to the trigger register sends one 32-bit word to the
  /// destination.
  struct PlDmaIp
  {
    static constexpr uint32_t regDestLo = 0x30;
    static constexpr uint32_t regDestHi = 0x34;
    static constexpr uint32_t regData = 0x38;
    static constexpr uint32_t regCacheBits = 0x3c;
    static constexpr uint32_t regAxiId = 0x40;
    static constexpr uint32_t regTrigger = 0x44;

    uint64_t base = 0xb000'0000;
    PlPort port = PlPort::HPC0;
    uint32_t destLo = 0;
    uint32_t destHi = 0;
    uint32_t data = 0;
    uint32_t cacheBits = 0;
    uint32_t axiId = 0;
  };

  /// Latch a register write. Writing 1 to the trigger offset fires the
  /// transaction and returns its outcome; other offsets return nothing.
  std::optional<Outcome> plWriteReg(Smmu& smmu, PhysMemory& mem, PlDmaIp& ip,
                                    uint32_t offset, uint32_t value);

  /// Issue the IP's write transaction: stream id built from the port code
  /// and latched AXI ID, destination from the latched address halves, a
  /// 4-byte little-endian payload.
  Outcome plTrigger(Smmu& smmu, PhysMemory& mem, const PlDmaIp& ip);

}
