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
#include <optional>
#include <vector>

#include "smmusim/errors.hpp"

namespace smmusim
{

  constexpr unsigned streamIdBits = 15;
  constexpr uint16_t streamIdMask = 0x7fff;
  constexpr unsigned streamMapEntries = 48;

  /// 15-bit transaction-stream identifier. The low six bits carry the AXI ID
  /// and bits [9:6] the master-port code; bits [14:10] take part in matching
  /// but are always built as zero.
  struct StreamId
  {
    uint16_t value = 0;

    uint8_t axiId() const
    { return value & 0x3f; }

    uint8_t masterPort() const
    { return (value >> 6) & 0xf; }

    uint8_t upper() const
    { return (value >> 10) & 0x1f; }
  };

  /// Compose a StreamId from a master-port code (4 bits) and an AXI ID
  /// (6 bits). Throws FieldOutOfRange when either field does not fit.
  StreamId makeStreamId(uint8_t masterPort, uint8_t axiId);

  /// Stream-match register: an entry takes part in the search only while
  /// valid; a set mask bit makes the corresponding id bit "don't care".
  struct Smr
  {
    bool valid = false;
    uint16_t mask = 0;
    uint16_t id = 0;

    bool matches(uint16_t sid) const
    { return valid and (((sid ^ id) & ~mask & streamIdMask) == 0); }
  };

  enum class S2crType : uint8_t
  {
    Translation,   // routed to context bank cbndx
    Bypass,
    Fault,
    Reserved       // behaves as Fault
  };

  enum class InstCfg : uint8_t
  {
    Default,       // no instruction/data restriction
    Instruction,
    Data
  };

  /// Stream-to-context register: what to do with a matched stream.
  struct S2cr
  {
    S2crType type = S2crType::Fault;
    uint8_t cbndx = 0;
    InstCfg instCfg = InstCfg::Default;
  };

  /// Outcome of a stream-mapping lookup. MultipleMatch surfaces the
  /// architecturally unpredictable case as a deterministic, ascending index
  /// list.
  struct MatchResult
  {
    enum class Kind { Matched, NoMatch, MultipleMatch };

    Kind kind = Kind::NoMatch;
    unsigned index = 0;              // valid when Matched
    std::vector<unsigned> indices;   // valid when MultipleMatch

    static MatchResult matched(unsigned index)
    { return { Kind::Matched, index, {} }; }

    static MatchResult noMatch()
    { return { Kind::NoMatch, 0, {} }; }

    static MatchResult multiple(std::vector<unsigned> indices)
    { return { Kind::MultipleMatch, 0, std::move(indices) }; }
  };

  enum class StreamMapMode { Matching, Indexing };

  /// The 48-entry stream mapping table pairing one SMR with one S2CR per
  /// entry.
  class StreamMapTable
  {
  public:

    StreamMapMode mode() const
    { return mode_; }

    void setMode(StreamMapMode mode)
    { mode_ = mode; }

    /// The extended stream-matching format is out of scope; enabling it is
    /// rejected.
    void setExtendedIdEnable(bool enable)
    {
      if (enable)
        throw UnsupportedFeature("extended stream matching (EXIDENABLE) is "
                                 "not supported");
    }

    const Smr& smr(unsigned n) const
    { return entries_.at(checkIndex(n)).smr; }

    const S2cr& s2cr(unsigned n) const
    { return entries_.at(checkIndex(n)).s2cr; }

    /// Replace entry n. Takes effect for the next lookup.
    void program(unsigned n, const Smr& smr, const S2cr& s2cr);

    /// Stream-matching lookup across all 48 entries.
    MatchResult matchStream(uint16_t sid) const;

    /// Stream-indexing lookup: the id is the entry index.
    MatchResult indexStream(uint16_t sid) const;

    /// Lookup according to the configured mode.
    MatchResult resolve(uint16_t sid) const
    {
      return mode_ == StreamMapMode::Matching ? matchStream(sid)
                                              : indexStream(sid);
    }

    /// Lowest entry whose SMR is invalid, if any.
    std::optional<unsigned> lowestFreeEntry() const;

  private:

    static unsigned checkIndex(unsigned n)
    {
      if (n >= streamMapEntries)
        throw IndexOutOfRange("stream map index must be < 48");
      return n;
    }

    struct Entry
    {
      Smr smr;
      S2cr s2cr;
    };

    std::array<Entry, streamMapEntries> entries_{};
    StreamMapMode mode_ = StreamMapMode::Matching;
  };

}
