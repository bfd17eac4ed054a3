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

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "smmusim/dma_devices.hpp"
#include "smmusim/dts_config.hpp"
#include "smmusim/iommu_api.hpp"
#include "smmusim/phys_mem.hpp"
#include "smmusim/smmu.hpp"

namespace smmusim
{

  /// Scripted scenario runner. One command per line, `#` comments:
  ///
  ///   load-dts <file>
  ///   policy unmatched <bypass|fault>
  ///   policy ttbcr-override <on|off>
  ///   write-phys <hexaddr> <hexword32>
  ///   read-phys <hexaddr>
  ///   expect-phys <hexaddr> <hexword32>
  ///   domain <name> alloc
  ///   domain <name> external <process-name>
  ///   process-table <name> ia <bits> map <hexva> <hexpa> [<hexva> <hexpa>..]
  ///   attach <domain> <device-name> [instruction]
  ///   map <domain> <hexva> <hexpa> <size>
  ///   dma <channel> <hexsrc> <hexdst> <len>
  ///   pl port <hpc0|hpc1>
  ///   pl set <reg-offset> <hexword32>
  ///   pl trigger
  ///   tlb flush
  ///   expect-fault <GFAULT|CFAULT> [reason]
  ///   expect-xlate <hexpa>
  ///
  /// The whole script is parsed before anything executes; an unknown or
  /// malformed command aborts with a usage error (exit 2). A failed
  /// expect-* assertion or a runtime error exits 1, success 0.
  class ScenarioRunner
  {
  public:

    ScenarioRunner(std::ostream& trace, std::ostream& text);

    int runFile(const std::filesystem::path& path);

    /// Run script text; relative load-dts paths resolve against baseDir.
    int runText(std::string_view script,
                const std::filesystem::path& baseDir = ".");

    // State stays inspectable after a run.

    PhysMemory& mem()
    { return mem_; }

    Smmu& smmu()
    { return smmu_; }

    IommuRegistry& registry()
    { return registry_; }

    std::vector<DmaChannel>& channels()
    { return channels_; }

    const std::optional<Outcome>& lastOutcome() const
    { return lastOutcome_; }

  private:

    enum class Op
    {
      LoadDts, PolicyUnmatched, PolicyTtbcrOverride, WritePhys, ReadPhys,
      ExpectPhys, DomainAlloc, DomainExternal, ProcessTable, Attach, Map,
      Dma, PlPort, PlSet, PlTrigger, TlbFlush, ExpectFault, ExpectXlate
    };

    struct Command
    {
      Op op{};
      unsigned line = 0;
      std::string a;   // file / domain / channel / fault-kind
      std::string b;   // device / process-table / reason
      bool flag = false;
      std::vector<uint64_t> nums;
      std::vector<std::pair<uint64_t, uint64_t>> pairs;
    };

    std::vector<Command> parse(std::string_view script) const;
    int execute(const std::vector<Command>& commands,
                const std::filesystem::path& baseDir);

    void loadDts(const Command& cmd, const std::filesystem::path& baseDir);
    DmaChannel* channelByName(const std::string& name);
    unsigned domainId(const Command& cmd, const std::string& name) const;

    [[noreturn]] static void usageError(unsigned line,
                                        const std::string& message);
    [[noreturn]] static void runtimeError(unsigned line,
                                          const std::string& message);

    std::ostream& trace_;
    std::ostream& text_;

    PhysMemory mem_;
    Smmu smmu_;
    IommuRegistry registry_;
    std::vector<DmaChannel> channels_;
    PlDmaIp pl_;
    std::map<std::string, unsigned> domains_;
    std::map<std::string, WalkConfig> processTables_;
    std::optional<Outcome> lastOutcome_;
    bool ttbcrOverride_ = true;
    bool configStarted_ = false;
  };

  /// Device-tree lint used by `smmusim dts check`: parse, resolve masters,
  /// report diagnostics and per-channel enablement. Returns the process exit
  /// code (0 ok, 2 parse error).
  int dtsCheck(const std::filesystem::path& path, std::ostream& out);

}
