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

#include "smmusim/stream_mapping.hpp"

namespace smmusim
{

  StreamId makeStreamId(uint8_t masterPort, uint8_t axiId)
  {
    if (masterPort >= 16)
      throw FieldOutOfRange("master-port code must fit in 4 bits");
    if (axiId >= 64)
      throw FieldOutOfRange("AXI ID must fit in 6 bits");
    return StreamId{ uint16_t((uint16_t(masterPort) << 6) | axiId) };
  }


  void StreamMapTable::program(unsigned n, const Smr& smr, const S2cr& s2cr)
  {
    checkIndex(n);
    if (s2cr.cbndx >= 16)
      throw IndexOutOfRange("context bank index must be < 16");
    entries_[n] = Entry{ smr, s2cr };
  }


  MatchResult StreamMapTable::matchStream(uint16_t sid) const
  {
    std::vector<unsigned> hits;
    for (unsigned n = 0; n < streamMapEntries; ++n)
      if (entries_[n].smr.matches(sid))
        hits.push_back(n);

    if (hits.empty())
      return MatchResult::noMatch();
    if (hits.size() == 1)
      return MatchResult::matched(hits.front());
    return MatchResult::multiple(std::move(hits));
  }


  MatchResult StreamMapTable::indexStream(uint16_t sid) const
  {
    if (sid < streamMapEntries)
      return MatchResult::matched(sid);
    return MatchResult::noMatch();
  }


  std::optional<unsigned> StreamMapTable::lowestFreeEntry() const
  {
    for (unsigned n = 0; n < streamMapEntries; ++n)
      if (not entries_[n].smr.valid)
        return n;
    return std::nullopt;
  }

}
