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

#include "smmusim/context_bank.hpp"

#include <bit>

namespace smmusim
{

  unsigned decodePasize(uint8_t code)
  {
    switch (code)
      {
      case 0: return 32;
      case 1: return 36;
      case 2: return 40;
      case 3: return 42;
      case 4: return 44;
      case 5: return 48;
      default:
        throw ReservedEncoding("PASize codes 6 and 7 are reserved");
      }
  }


  ContextBankFile::ContextBankFile()
  {
    for (unsigned i = 0; i < numContextBanks; ++i)
      banks_[i].index = i;
  }


  unsigned ContextBankFile::checkIndex(unsigned index) const
  {
    if (index >= numContextBanks)
      throw IndexOutOfRange("context bank index must be < 16");
    return index;
  }


  unsigned ContextBankFile::allocate()
  {
    for (unsigned i = 0; i < numContextBanks; ++i)
      if (not (allocated_ & (1u << i)))
        {
          allocated_ |= uint16_t(1u << i);
          banks_[i] = ContextBank{};
          banks_[i].index = i;
          return i;
        }
    throw NoFreeBank("all 16 context banks are allocated");
  }


  void ContextBankFile::release(unsigned index)
  {
    checkIndex(index);
    if (not (allocated_ & (1u << index)))
      throw BankNotAllocated("release of unallocated bank");
    allocated_ &= uint16_t(~(1u << index));
    banks_[index] = ContextBank{};
    banks_[index].index = index;
  }


  bool ContextBankFile::isAllocated(unsigned index) const
  {
    checkIndex(index);
    return allocated_ & (1u << index);
  }


  unsigned ContextBankFile::allocatedCount() const
  {
    return unsigned(std::popcount(allocated_));
  }


  void ContextBankFile::program(unsigned index, uint64_t ttbr0, uint8_t t0sz,
                                uint8_t pasize)
  {
    checkIndex(index);
    if (not (allocated_ & (1u << index)))
      throw BankNotAllocated("programming an unallocated bank");

    unsigned iaBits = 64 - unsigned(t0sz);
    if (t0sz >= 64 or iaBits < 25 or iaBits > 48)
      throw InvalidT0sz("T0SZ yields an input width outside [25, 48]");
    decodePasize(pasize);  // reject reserved encodings up front

    ContextBank& cb = banks_[index];
    cb.ttbr0 = ttbr0;
    cb.t0sz = t0sz;
    cb.pasize = pasize;
  }


  void ContextBankFile::enable(unsigned index, bool on)
  {
    checkIndex(index);
    if (not (allocated_ & (1u << index)))
      throw BankNotAllocated("enabling an unallocated bank");

    // Enabling requires programmed address sizes, so that an enabled bank
    // always carries a walkable configuration.
    if (on)
      {
        unsigned iaBits = banks_[index].iaBits();
        if (iaBits < 25 or iaBits > 48)
          throw InvalidT0sz("bank must be programmed before enable");
        decodePasize(banks_[index].pasize);
      }
    banks_[index].enabled = on;
  }


  ContextBank& ContextBankFile::bank(unsigned index)
  {
    return banks_[checkIndex(index)];
  }


  const ContextBank& ContextBankFile::bank(unsigned index) const
  {
    return banks_[checkIndex(index)];
  }

}
