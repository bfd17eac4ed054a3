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
#include <string_view>
#include <vector>

#include "smmusim/errors.hpp"

namespace smmusim
{

  /// One device-tree property. Cell lists come from <..> angle brackets,
  /// byte lists from [..] brackets; a bare `name;` is Empty. Value shapes
  /// outside the supported subset are preserved verbatim as Raw.
  struct DtsProperty
  {
    enum class Kind { Empty, Cells, String, StringList, Bytes, Raw };

    std::string name;
    Kind kind = Kind::Empty;
    std::vector<uint32_t> cells;
    std::vector<std::string> strings;
    std::vector<uint8_t> bytes;
    std::string raw;

    bool operator==(const DtsProperty&) const = default;
  };

  /// A device-tree node: properties and children in declaration order. The
  /// phandle is lifted out of a `phandle` or `linux,phandle` property.
  struct DtsNode
  {
    std::string name;
    std::vector<DtsProperty> properties;
    std::vector<DtsNode> children;
    std::optional<uint32_t> phandle;

    const DtsProperty* find(std::string_view propName) const;

    /// Depth-first search for the first node with the given name.
    const DtsNode* findNode(std::string_view nodeName) const;

    const DtsNode* findByPhandle(uint32_t handle) const;

    bool operator==(const DtsNode&) const = default;
  };

  /// Parse device-tree source. Supports the flattened-source subset: nodes,
  /// the property shapes above, `/* */` and `//` comments, labels (ignored).
  /// `/dts-v1/` headers and includes are rejected. Throws ParseError with
  /// the offending line and column.
  DtsNode parseDts(std::string_view text);

  /// Serialize a tree back to source. Parsing the output reproduces a
  /// structurally equal tree.
  std::string writeDts(const DtsNode& root);

  /// Device/StreamID pair from the smmu node's mmu-masters list.
  struct MasterBinding
  {
    uint32_t devicePhandle = 0;
    uint16_t streamId = 0;

    bool operator==(const MasterBinding&) const = default;
  };

  struct MasterResolution
  {
    std::vector<MasterBinding> bindings;    // in listing order
    std::vector<std::string> diagnostics;   // iommus/mmu-masters disagreements
  };

  /// Collect the (phandle, StreamID) pairs of the first node carrying an
  /// mmu-masters property. Every listed phandle must resolve to a node. A
  /// device whose own iommus entry disagrees gets a diagnostic; the
  /// mmu-masters value wins.
  MasterResolution resolveMasters(const DtsNode& root);

  /// A DMA channel node counts as enabled when its status is absent or
  /// "okay" and it carries both clock-names and clocks.
  bool isChannelEnabled(const DtsNode& node);

}
