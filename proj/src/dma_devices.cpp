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

#include "smmusim/dma_devices.hpp"

#include <algorithm>

namespace smmusim
{

  std::vector<DmaChannel> standardChannels()
  {
    std::vector<DmaChannel> channels;
    channels.reserve(16);
    for (unsigned k = 0; k < 8; ++k)
      channels.push_back(DmaChannel{
          "dma" + std::to_string(k + 1) + "chan0",
          0xfd50'0000 + 0x1'0000ull * k,
          PowerDomain::FPD, 128, uint16_t(0x14e8 + k), true });
    for (unsigned k = 0; k < 8; ++k)
      channels.push_back(DmaChannel{
          "dma" + std::to_string(k + 9) + "chan0",
          0xffa8'0000 + 0x1'0000ull * k,
          PowerDomain::LPD, 64, uint16_t(0x868 + k), true });
    return channels;
  }


  TransferReport dmaTransfer(Smmu& smmu, PhysMemory& mem,
                             const DmaChannel& channel, uint64_t src,
                             uint64_t dst, uint64_t len)
  {
    if (not channel.enabled)
      throw ChannelDisabled("channel is disabled: " + channel.name);
    if (len == 0)
      throw Error("transfer length must be >= 1");

    constexpr uint64_t pageMask = PhysMemory::pageSize - 1;

    TransferReport report;
    uint64_t offset = 0;
    while (offset < len)
      {
        uint64_t chunk = len - offset;
        chunk = std::min(chunk, PhysMemory::pageSize -
                                ((src + offset) & pageMask));
        chunk = std::min(chunk, PhysMemory::pageSize -
                                ((dst + offset) & pageMask));

        Transaction read{ channel.streamId, src + offset, AccessType::Read,
                          TransactionKind::Data, {}, chunk, 0 };
        auto rd = smmu.access(mem, read);
        report.outcomes.push_back(rd.outcome);
        if (isFault(rd.outcome))
          return report;

        Transaction write{ channel.streamId, dst + offset, AccessType::Write,
                           TransactionKind::Data, std::move(rd.data), 0, 0 };
        auto wr = smmu.access(mem, write);
        report.outcomes.push_back(wr.outcome);
        if (isFault(wr.outcome))
          return report;

        report.bytesCopied += chunk;
        offset += chunk;
      }
    report.completed = true;
    return report;
  }


  uint8_t portCode(PlPort port)
  {
    return port == PlPort::HPC0 ? 0x8 : 0x9;
  }


  std::optional<Outcome> plWriteReg(Smmu& smmu, PhysMemory& mem, PlDmaIp& ip,
                                    uint32_t offset, uint32_t value)
  {
    switch (offset)
      {
      case PlDmaIp::regDestLo: ip.destLo = value; return std::nullopt;
      case PlDmaIp::regDestHi: ip.destHi = value; return std::nullopt;
      case PlDmaIp::regData: ip.data = value; return std::nullopt;
      case PlDmaIp::regCacheBits: ip.cacheBits = value; return std::nullopt;
      case PlDmaIp::regAxiId: ip.axiId = value; return std::nullopt;
      case PlDmaIp::regTrigger:
        if (value == 1)
          return plTrigger(smmu, mem, ip);
        return std::nullopt;
      default:
        throw BadRegisterOffset("unknown register offset: " +
                                std::to_string(offset));
      }
  }


  Outcome plTrigger(Smmu& smmu, PhysMemory& mem, const PlDmaIp& ip)
  {
    StreamId sid = makeStreamId(portCode(ip.port), ip.axiId & 0x3f);

    std::vector<uint8_t> payload(4);
    for (int i = 0; i < 4; ++i)
      payload[i] = uint8_t(ip.data >> (8 * i));

    Transaction txn{ sid.value,
                     (uint64_t(ip.destHi) << 32) | ip.destLo,
                     AccessType::Write, TransactionKind::Data,
                     std::move(payload), 0, uint8_t(ip.cacheBits & 0xf) };
    return smmu.access(mem, txn).outcome;
  }

}
