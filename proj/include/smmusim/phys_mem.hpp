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

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "smmusim/errors.hpp"

namespace smmusim
{

  /// Sparse byte-addressable physical memory with 4 KB backing pages. Pages
  /// come into existence on first write; reads of never-written bytes return
  /// zero. All multi-byte accesses are little-endian. Addresses are capped at
  /// 40 bits, the modeled output-address ceiling.
  ///
  /// A bump allocator hands out pages for translation tables from a
  /// configurable base that callers keep disjoint from scenario data.
  class PhysMemory
  {
  public:

    static constexpr unsigned pageShift = 12;
    static constexpr uint64_t pageSize = uint64_t(1) << pageShift;
    static constexpr unsigned physBits = 40;
    static constexpr uint64_t physLimit = uint64_t(1) << physBits;
    static constexpr uint64_t defaultTableBase = 0x8000'0000;

    explicit PhysMemory(uint64_t tableBase = defaultTableBase)
      : allocCursor_(tableBase)
    { }

    /// Write the given bytes starting at pa. Accesses may straddle page
    /// boundaries. Throws AddressOutOfRange if the range ends beyond 2^40.
    void writeBytes(uint64_t pa, std::span<const uint8_t> data);

    /// Read len bytes starting at pa. Never-written bytes read as zero.
    std::vector<uint8_t> readBytes(uint64_t pa, uint64_t len) const;

    void writeWord32(uint64_t pa, uint32_t value);
    uint32_t readWord32(uint64_t pa) const;

    void writeWord64(uint64_t pa, uint64_t value);
    uint64_t readWord64(uint64_t pa) const;

    /// Return a 4 KB-aligned, zero-filled page that no previous call has
    /// returned, advancing the allocation cursor by one page. Throws
    /// AllocatorExhausted once the cursor would pass 2^40.
    uint64_t allocTablePage();

    uint64_t allocCursor() const
    { return allocCursor_; }

    /// Number of pages that have been written (or handed out as tables).
    size_t pageCount() const
    { return pages_.size(); }

    /// Content digest, insensitive to the order pages were created in and to
    /// the presence of all-zero pages. Used by tests to assert that faulted
    /// transactions leave memory untouched.
    uint64_t contentHash() const;

  private:

    using Page = std::array<uint8_t, pageSize>;

    Page& pageForWrite(uint64_t pfn);
    const Page* pageForRead(uint64_t pfn) const;

    static void checkRange(uint64_t pa, uint64_t len);

    std::unordered_map<uint64_t, std::unique_ptr<Page>> pages_;
    uint64_t allocCursor_ = defaultTableBase;
  };

}
