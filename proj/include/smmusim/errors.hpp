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
#include <stdexcept>
#include <string>

namespace smmusim
{

  /// Base class of every error thrown by the simulator. Modeled hardware
  /// faults (walk faults, translation outcomes) are never exceptions; these
  /// types cover caller and configuration mistakes only.
  struct Error : std::runtime_error
  {
    using std::runtime_error::runtime_error;
  };

  // Physical memory.
  struct AddressOutOfRange : Error { using Error::Error; };
  struct AllocatorExhausted : Error { using Error::Error; };

  // Translation tables.
  struct MisalignedAddress : Error { using Error::Error; };
  struct InputOutOfRange : Error { using Error::Error; };
  struct OutputOutOfRange : Error { using Error::Error; };
  struct Remap : Error { using Error::Error; };
  struct NotMapped : Error { using Error::Error; };
  struct UnsupportedGranule : Error { using Error::Error; };

  // Stream mapping.
  struct FieldOutOfRange : Error { using Error::Error; };
  struct IndexOutOfRange : Error { using Error::Error; };
  struct UnsupportedFeature : Error { using Error::Error; };

  // Context banks.
  struct ReservedEncoding : Error { using Error::Error; };
  struct InvalidT0sz : Error { using Error::Error; };
  struct BankNotAllocated : Error { using Error::Error; };
  struct NoFreeBank : Error { using Error::Error; };

  // IOMMU management layer.
  struct DuplicateDevice : Error { using Error::Error; };
  struct GroupBusy : Error { using Error::Error; };
  struct NotAttached : Error { using Error::Error; };
  struct NoFreeStreamEntry : Error { using Error::Error; };
  struct ExternalTableReadOnly : Error { using Error::Error; };
  struct AlreadyAttached : Error { using Error::Error; };
  struct UnknownEntity : Error { using Error::Error; };

  // Client devices.
  struct ChannelDisabled : Error { using Error::Error; };
  struct BadRegisterOffset : Error { using Error::Error; };

  /// Device-tree source error carrying the 1-based position of the offending
  /// token.
  struct ParseError : Error
  {
    ParseError(unsigned line, unsigned column, const std::string& what)
      : Error("dts:" + std::to_string(line) + ":" + std::to_string(column) +
              ": " + what),
        line(line), column(column)
    { }

    unsigned line = 0;
    unsigned column = 0;
  };

  struct UnresolvedPhandle : Error { using Error::Error; };
  struct DtsError : Error { using Error::Error; };

}
