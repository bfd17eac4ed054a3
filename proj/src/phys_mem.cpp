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

#include "smmusim/phys_mem.hpp"

#include <algorithm>
#include <cstring>

namespace smmusim
{

  void PhysMemory::checkRange(uint64_t pa, uint64_t len)
  {
    if (pa >= physLimit or len > physLimit - pa)
      throw AddressOutOfRange("physical access beyond 2^40: pa=" +
                              std::to_string(pa) + " len=" +
                              std::to_string(len));
  }


  PhysMemory::Page& PhysMemory::pageForWrite(uint64_t pfn)
  {
    auto& slot = pages_[pfn];
    if (not slot)
      {
        slot = std::make_unique<Page>();
        slot->fill(0);
      }
    return *slot;
  }


  const PhysMemory::Page* PhysMemory::pageForRead(uint64_t pfn) const
  {
    auto it = pages_.find(pfn);
    return it == pages_.end() ? nullptr : it->second.get();
  }


  void PhysMemory::writeBytes(uint64_t pa, std::span<const uint8_t> data)
  {
    checkRange(pa, data.size());

    size_t done = 0;
    while (done < data.size())
      {
        uint64_t addr = pa + done;
        uint64_t offset = addr & (pageSize - 1);
        size_t chunk = std::min<uint64_t>(data.size() - done, pageSize - offset);
        Page& page = pageForWrite(addr >> pageShift);
        std::memcpy(page.data() + offset, data.data() + done, chunk);
        done += chunk;
      }
  }


  std::vector<uint8_t> PhysMemory::readBytes(uint64_t pa, uint64_t len) const
  {
    checkRange(pa, len);

    std::vector<uint8_t> result(len, 0);
    size_t done = 0;
    while (done < len)
      {
        uint64_t addr = pa + done;
        uint64_t offset = addr & (pageSize - 1);
        size_t chunk = std::min<uint64_t>(len - done, pageSize - offset);
        if (const Page* page = pageForRead(addr >> pageShift))
          std::memcpy(result.data() + done, page->data() + offset, chunk);
        done += chunk;
      }
    return result;
  }


  void PhysMemory::writeWord32(uint64_t pa, uint32_t value)
  {
    uint8_t bytes[4];
    for (int i = 0; i < 4; ++i)
      bytes[i] = uint8_t(value >> (8 * i));
    writeBytes(pa, bytes);
  }


  uint32_t PhysMemory::readWord32(uint64_t pa) const
  {
    auto bytes = readBytes(pa, 4);
    uint32_t value = 0;
    for (int i = 3; i >= 0; --i)
      value = (value << 8) | bytes[i];
    return value;
  }


  void PhysMemory::writeWord64(uint64_t pa, uint64_t value)
  {
    uint8_t bytes[8];
    for (int i = 0; i < 8; ++i)
      bytes[i] = uint8_t(value >> (8 * i));
    writeBytes(pa, bytes);
  }


  uint64_t PhysMemory::readWord64(uint64_t pa) const
  {
    auto bytes = readBytes(pa, 8);
    uint64_t value = 0;
    for (int i = 7; i >= 0; --i)
      value = (value << 8) | bytes[i];
    return value;
  }


  uint64_t PhysMemory::allocTablePage()
  {
    if (allocCursor_ + pageSize > physLimit)
      throw AllocatorExhausted("table allocator past 2^40");

    uint64_t pa = allocCursor_;
    allocCursor_ += pageSize;

    // Force the page into existence zero-filled so allocation order alone
    // determines memory contents.
    pageForWrite(pa >> pageShift).fill(0);
    return pa;
  }


  uint64_t PhysMemory::contentHash() const
  {
    constexpr uint64_t fnvOffset = 0xcbf29ce484222325ull;
    constexpr uint64_t fnvPrime = 0x100000001b3ull;

    uint64_t combined = 0;
    for (const auto& [pfn, page] : pages_)
      {
        bool allZero = std::all_of(page->begin(), page->end(),
                                   [] (uint8_t b) { return b == 0; });
        if (allZero)
          continue;
        uint64_t h = fnvOffset;
        for (int i = 0; i < 8; ++i)
          {
            h ^= uint8_t(pfn >> (8 * i));
            h *= fnvPrime;
          }
        for (uint8_t b : *page)
          {
            h ^= b;
            h *= fnvPrime;
          }
        combined += h;  // order-independent combine
      }
    return combined;
  }

}
