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

#include "smmusim/scenario.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "smmusim/translation_table.hpp"

namespace smmusim
{

  namespace
  {

    struct UsageAbort
    {
      std::string message;
    };

    struct RunAbort
    {
      std::string message;
    };


    std::vector<std::string> tokenize(std::string_view line)
    {
      std::vector<std::string> words;
      size_t i = 0;
      while (i < line.size())
        {
          while (i < line.size() and std::isspace(uint8_t(line[i])))
            ++i;
          if (i >= line.size() or line[i] == '#')
            break;
          size_t start = i;
          while (i < line.size() and not std::isspace(uint8_t(line[i])))
            ++i;
          words.emplace_back(line.substr(start, i - start));
        }
      return words;
    }


    /// Addresses and data words are hexadecimal, 0x prefix optional.
    uint64_t parseHex(unsigned line, const std::string& token)
    {
      std::string_view body = token;
      if (body.starts_with("0x") or body.starts_with("0X"))
        body.remove_prefix(2);
      if (body.empty() or body.size() > 16)
        throw UsageAbort{ "line " + std::to_string(line) +
                          ": bad hex value '" + token + "'" };
      uint64_t value = 0;
      for (char c : body)
        {
          if (not std::isxdigit(uint8_t(c)))
            throw UsageAbort{ "line " + std::to_string(line) +
                              ": bad hex value '" + token + "'" };
          unsigned digit = std::isdigit(uint8_t(c)) ? unsigned(c - '0')
                         : unsigned(std::tolower(uint8_t(c)) - 'a' + 10);
          value = (value << 4) | digit;
        }
      return value;
    }


    /// Counts (lengths, sizes, bit widths) are decimal unless 0x-prefixed.
    uint64_t parseCount(unsigned line, const std::string& token)
    {
      if (token.starts_with("0x") or token.starts_with("0X"))
        return parseHex(line, token);
      uint64_t value = 0;
      if (token.empty())
        throw UsageAbort{ "line " + std::to_string(line) + ": bad count" };
      for (char c : token)
        {
          if (not std::isdigit(uint8_t(c)))
            throw UsageAbort{ "line " + std::to_string(line) +
                              ": bad count '" + token + "'" };
          value = value * 10 + unsigned(c - '0');
        }
      return value;
    }


    bool validFaultReason(const std::string& kind, const std::string& reason)
    {
      if (kind == "GFAULT")
        return reason == "UnmatchedStream" or reason == "MultipleMatch" or
               reason == "StreamFaultContext";
      return reason == "TranslationFault" or
             reason == "AddressSizeFaultInput" or
             reason == "AddressSizeFaultOutput" or
             reason == "InvalidContext" or reason == "InstCfgMismatch";
    }


    /// Register base of a device node, from its reg property (address-hi,
    /// address-lo, size cells) or failing that the unit address in the name.
    std::optional<uint64_t> nodeBaseAddress(const DtsNode& node)
    {
      if (const DtsProperty* reg = node.find("reg");
          reg and reg->kind == DtsProperty::Kind::Cells and
          reg->cells.size() >= 2)
        return (uint64_t(reg->cells[0]) << 32) | reg->cells[1];

      size_t at = node.name.find('@');
      if (at == std::string::npos or at + 1 >= node.name.size())
        return std::nullopt;
      errno = 0;
      char* end = nullptr;
      unsigned long long value = strtoull(node.name.c_str() + at + 1, &end,
                                          16);
      if (end == node.name.c_str() + at + 1 or *end != '\0')
        return std::nullopt;
      return uint64_t(value);
    }

  }


  ScenarioRunner::ScenarioRunner(std::ostream& trace, std::ostream& text)
    : trace_(trace), text_(text), channels_(standardChannels())
  {
    smmu_.setTraceSink([this] (std::string_view line) {
      trace_ << line << '\n';
    });

    // Without a device tree the registry mirrors the standard channel list.
    for (const DmaChannel& ch : channels_)
      registry_.registerDevice(ch.name, ch.streamId);
  }


  void ScenarioRunner::usageError(unsigned line, const std::string& message)
  {
    throw UsageAbort{ "line " + std::to_string(line) + ": " + message };
  }


  void ScenarioRunner::runtimeError(unsigned line,
                                    const std::string& message)
  {
    throw RunAbort{ "line " + std::to_string(line) + ": " + message };
  }


  std::vector<ScenarioRunner::Command>
  ScenarioRunner::parse(std::string_view script) const
  {
    std::vector<Command> commands;
    unsigned lineNo = 0;

    std::istringstream stream{ std::string(script) };
    std::string line;
    while (std::getline(stream, line))
      {
        ++lineNo;
        std::vector<std::string> w = tokenize(line);
        if (w.empty())
          continue;

        Command cmd;
        cmd.line = lineNo;
        const std::string& verb = w[0];

        auto arity = [&] (size_t n) {
          if (w.size() != n)
            usageError(lineNo, "'" + verb + "' takes " +
                       std::to_string(n - 1) + " arguments");
        };

        if (verb == "load-dts")
          {
            arity(2);
            cmd.op = Op::LoadDts;
            cmd.a = w[1];
          }
        else if (verb == "policy")
          {
            if (w.size() == 3 and w[1] == "unmatched" and
                (w[2] == "bypass" or w[2] == "fault"))
              {
                cmd.op = Op::PolicyUnmatched;
                cmd.flag = (w[2] == "fault");
              }
            else if (w.size() == 3 and w[1] == "ttbcr-override" and
                     (w[2] == "on" or w[2] == "off"))
              {
                cmd.op = Op::PolicyTtbcrOverride;
                cmd.flag = (w[2] == "on");
              }
            else
              usageError(lineNo, "usage: policy unmatched <bypass|fault> | "
                                 "policy ttbcr-override <on|off>");
          }
        else if (verb == "write-phys")
          {
            arity(3);
            cmd.op = Op::WritePhys;
            cmd.nums = { parseHex(lineNo, w[1]), parseHex(lineNo, w[2]) };
          }
        else if (verb == "read-phys")
          {
            arity(2);
            cmd.op = Op::ReadPhys;
            cmd.nums = { parseHex(lineNo, w[1]) };
          }
        else if (verb == "expect-phys")
          {
            arity(3);
            cmd.op = Op::ExpectPhys;
            cmd.nums = { parseHex(lineNo, w[1]), parseHex(lineNo, w[2]) };
          }
        else if (verb == "domain")
          {
            if (w.size() == 3 and w[2] == "alloc")
              {
                cmd.op = Op::DomainAlloc;
                cmd.a = w[1];
              }
            else if (w.size() == 4 and w[2] == "external")
              {
                cmd.op = Op::DomainExternal;
                cmd.a = w[1];
                cmd.b = w[3];
              }
            else
              usageError(lineNo, "usage: domain <name> alloc | "
                                 "domain <name> external <process-name>");
          }
        else if (verb == "process-table")
          {
            if (w.size() < 7 or w[2] != "ia" or w[4] != "map" or
                (w.size() - 5) % 2 != 0)
              usageError(lineNo, "usage: process-table <name> ia <bits> map "
                                 "<hexva> <hexpa> [<hexva> <hexpa> ...]");
            cmd.op = Op::ProcessTable;
            cmd.a = w[1];
            cmd.nums = { parseCount(lineNo, w[3]) };
            for (size_t i = 5; i + 1 < w.size(); i += 2)
              cmd.pairs.emplace_back(parseHex(lineNo, w[i]),
                                     parseHex(lineNo, w[i + 1]));
          }
        else if (verb == "attach")
          {
            if (w.size() == 4 and w[3] == "instruction")
              cmd.flag = true;
            else if (w.size() != 3)
              usageError(lineNo,
                         "usage: attach <domain> <device> [instruction]");
            cmd.op = Op::Attach;
            cmd.a = w[1];
            cmd.b = w[2];
          }
        else if (verb == "map")
          {
            arity(5);
            cmd.op = Op::Map;
            cmd.a = w[1];
            cmd.nums = { parseHex(lineNo, w[2]), parseHex(lineNo, w[3]),
                         parseCount(lineNo, w[4]) };
          }
        else if (verb == "dma")
          {
            arity(5);
            cmd.op = Op::Dma;
            cmd.a = w[1];
            cmd.nums = { parseHex(lineNo, w[2]), parseHex(lineNo, w[3]),
                         parseCount(lineNo, w[4]) };
          }
        else if (verb == "pl")
          {
            if (w.size() == 3 and w[1] == "port" and
                (w[2] == "hpc0" or w[2] == "hpc1"))
              {
                cmd.op = Op::PlPort;
                cmd.flag = (w[2] == "hpc1");
              }
            else if (w.size() == 4 and w[1] == "set")
              {
                cmd.op = Op::PlSet;
                cmd.nums = { parseHex(lineNo, w[2]),
                             parseHex(lineNo, w[3]) };
              }
            else if (w.size() == 2 and w[1] == "trigger")
              cmd.op = Op::PlTrigger;
            else
              usageError(lineNo, "usage: pl port <hpc0|hpc1> | "
                                 "pl set <reg-offset> <hexword32> | "
                                 "pl trigger");
          }
        else if (verb == "tlb")
          {
            if (w.size() != 2 or w[1] != "flush")
              usageError(lineNo, "usage: tlb flush");
            cmd.op = Op::TlbFlush;
          }
        else if (verb == "expect-fault")
          {
            if ((w.size() != 2 and w.size() != 3) or
                (w[1] != "GFAULT" and w[1] != "CFAULT"))
              usageError(lineNo,
                         "usage: expect-fault <GFAULT|CFAULT> [reason]");
            if (w.size() == 3 and not validFaultReason(w[1], w[2]))
              usageError(lineNo, "unknown fault reason '" + w[2] + "'");
            cmd.op = Op::ExpectFault;
            cmd.a = w[1];
            if (w.size() == 3)
              cmd.b = w[2];
          }
        else if (verb == "expect-xlate")
          {
            arity(2);
            cmd.op = Op::ExpectXlate;
            cmd.nums = { parseHex(lineNo, w[1]) };
          }
        else
          usageError(lineNo, "unknown command '" + verb + "'");

        commands.push_back(std::move(cmd));
      }
    return commands;
  }


  DmaChannel* ScenarioRunner::channelByName(const std::string& name)
  {
    for (DmaChannel& ch : channels_)
      if (ch.name == name)
        return &ch;
    return nullptr;
  }


  unsigned ScenarioRunner::domainId(const Command& cmd,
                                    const std::string& name) const
  {
    auto it = domains_.find(name);
    if (it == domains_.end())
      runtimeError(cmd.line, "unknown domain '" + name + "'");
    return it->second;
  }


  void ScenarioRunner::loadDts(const Command& cmd,
                               const std::filesystem::path& baseDir)
  {
    if (configStarted_)
      runtimeError(cmd.line, "load-dts must come before domain or attach "
                             "commands");

    std::filesystem::path path = cmd.a;
    if (path.is_relative())
      path = baseDir / path;

    std::ifstream in(path);
    if (not in)
      runtimeError(cmd.line, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();

    DtsNode root = parseDts(buffer.str());
    MasterResolution resolution = resolveMasters(root);
    for (const std::string& diag : resolution.diagnostics)
      text_ << "dts: " << diag << '\n';

    // The device tree now describes the world: only listed masters exist,
    // and channel enablement follows the node contents.
    registry_.clear();
    channels_ = standardChannels();
    for (DmaChannel& ch : channels_)
      ch.enabled = false;

    for (const MasterBinding& binding : resolution.bindings)
      {
        const DtsNode* node = root.findByPhandle(binding.devicePhandle);
        std::string name = node->name;
        if (auto base = nodeBaseAddress(*node))
          for (DmaChannel& ch : channels_)
            if (ch.base == *base)
              {
                ch.streamId = binding.streamId;
                ch.enabled = isChannelEnabled(*node);
                name = ch.name;
                break;
              }
        registry_.registerDevice(name, binding.streamId);
      }
  }


  int ScenarioRunner::execute(const std::vector<Command>& commands,
                              const std::filesystem::path& baseDir)
  {
    for (const Command& cmd : commands)
      {
        try
          {
            switch (cmd.op)
              {
              case Op::LoadDts:
                loadDts(cmd, baseDir);
                break;

              case Op::PolicyUnmatched:
                smmu_.setUnmatchedPolicy(cmd.flag ? UnmatchedPolicy::Fault
                                                  : UnmatchedPolicy::Bypass);
                break;

              case Op::PolicyTtbcrOverride:
                ttbcrOverride_ = cmd.flag;
                break;

              case Op::WritePhys:
                mem_.writeWord32(cmd.nums[0], uint32_t(cmd.nums[1]));
                break;

              case Op::ReadPhys:
                {
                  uint32_t value = mem_.readWord32(cmd.nums[0]);
                  char buf[64];
                  snprintf(buf, sizeof(buf),
                           "read-phys 0x%llx -> 0x%08x",
                           (unsigned long long) cmd.nums[0], value);
                  text_ << buf << '\n';
                  break;
                }

              case Op::ExpectPhys:
                {
                  uint32_t value = mem_.readWord32(cmd.nums[0]);
                  if (value != uint32_t(cmd.nums[1]))
                    {
                      char buf[112];
                      snprintf(buf, sizeof(buf),
                               "phys 0x%llx = 0x%08x, expected 0x%08x",
                               (unsigned long long) cmd.nums[0], value,
                               uint32_t(cmd.nums[1]));
                      runtimeError(cmd.line,
                                   std::string("assertion failed: ") + buf);
                    }
                  break;
                }

              case Op::DomainAlloc:
                if (domains_.count(cmd.a))
                  runtimeError(cmd.line, "domain already exists: " + cmd.a);
                configStarted_ = true;
                domains_[cmd.a] = registry_.domainAlloc().id;
                break;

              case Op::DomainExternal:
                {
                  auto table = processTables_.find(cmd.b);
                  if (table == processTables_.end())
                    runtimeError(cmd.line,
                                 "unknown process table '" + cmd.b + "'");
                  registry_.setExternalTable(domainId(cmd, cmd.a),
                                             table->second.root);
                  break;
                }

              case Op::ProcessTable:
                if (processTables_.count(cmd.a))
                  runtimeError(cmd.line,
                               "process table already exists: " + cmd.a);
                configStarted_ = true;
                processTables_[cmd.a] =
                  buildProcessTable(mem_, unsigned(cmd.nums[0]), cmd.pairs);
                break;

              case Op::Attach:
                {
                  configStarted_ = true;
                  const IommuDevice& dev = registry_.device(cmd.b);
                  registry_.attachGroup(smmu_, mem_, domainId(cmd, cmd.a),
                                        dev.groupId,
                                        cmd.flag ? InstCfg::Instruction
                                                 : InstCfg::Data,
                                        ttbcrOverride_);
                  break;
                }

              case Op::Map:
                registry_.iommuMap(mem_, domainId(cmd, cmd.a), cmd.nums[0],
                                   cmd.nums[1], cmd.nums[2], 0);
                break;

              case Op::Dma:
                {
                  DmaChannel* ch = channelByName(cmd.a);
                  if (not ch)
                    runtimeError(cmd.line, "unknown channel '" + cmd.a + "'");
                  TransferReport report =
                    dmaTransfer(smmu_, mem_, *ch, cmd.nums[0], cmd.nums[1],
                                cmd.nums[2]);
                  if (const Outcome* last = report.lastOutcome())
                    lastOutcome_ = *last;
                  break;
                }

              case Op::PlPort:
                pl_.port = cmd.flag ? PlPort::HPC1 : PlPort::HPC0;
                break;

              case Op::PlSet:
                if (auto outcome = plWriteReg(smmu_, mem_, pl_,
                                              uint32_t(cmd.nums[0]),
                                              uint32_t(cmd.nums[1])))
                  lastOutcome_ = *outcome;
                break;

              case Op::PlTrigger:
                lastOutcome_ = plTrigger(smmu_, mem_, pl_);
                break;

              case Op::TlbFlush:
                smmu_.tlbInvalidateAll();
                break;

              case Op::ExpectFault:
                {
                  if (not lastOutcome_)
                    runtimeError(cmd.line, "assertion failed: no outcome "
                                           "recorded yet");
                  bool kindOk =
                    cmd.a == "GFAULT"
                      ? std::holds_alternative<GlobalFault>(*lastOutcome_)
                      : std::holds_alternative<ContextFault>(*lastOutcome_);
                  bool reasonOk = cmd.b.empty() or
                                  faultReason(*lastOutcome_) == cmd.b;
                  if (not kindOk or not reasonOk)
                    runtimeError(cmd.line, "assertion failed: last outcome "
                                 "is '" + describe(*lastOutcome_) +
                                 "', expected " + cmd.a +
                                 (cmd.b.empty() ? "" : " " + cmd.b));
                  break;
                }

              case Op::ExpectXlate:
                {
                  if (not lastOutcome_)
                    runtimeError(cmd.line, "assertion failed: no outcome "
                                           "recorded yet");
                  const auto* t = std::get_if<Translated>(&*lastOutcome_);
                  if (not t or t->pa != cmd.nums[0])
                    {
                      char buf[48];
                      snprintf(buf, sizeof(buf), "expected XLATE pa=0x%llx",
                               (unsigned long long) cmd.nums[0]);
                      runtimeError(cmd.line, "assertion failed: last outcome "
                                   "is '" + describe(*lastOutcome_) + "', " +
                                   buf);
                    }
                  break;
                }
              }
          }
        catch (const RunAbort&)
          {
            throw;
          }
        catch (const Error& e)
          {
            runtimeError(cmd.line, e.what());
          }
      }
    return 0;
  }


  int ScenarioRunner::runText(std::string_view script,
                              const std::filesystem::path& baseDir)
  {
    std::vector<Command> commands;
    try
      {
        commands = parse(script);
      }
    catch (const UsageAbort& abort)
      {
        text_ << "usage error: " << abort.message << '\n';
        return 2;
      }

    try
      {
        return execute(commands, baseDir);
      }
    catch (const RunAbort& abort)
      {
        text_ << "error: " << abort.message << '\n';
        return 1;
      }
    catch (const std::exception& e)
      {
        text_ << "error: " << e.what() << '\n';
        return 1;
      }
  }


  int ScenarioRunner::runFile(const std::filesystem::path& path)
  {
    std::ifstream in(path);
    if (not in)
      {
        text_ << "usage error: cannot open " << path.string() << '\n';
        return 2;
      }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return runText(buffer.str(), path.parent_path());
  }


  int dtsCheck(const std::filesystem::path& path, std::ostream& out)
  {
    std::ifstream in(path);
    if (not in)
      {
        out << "cannot open " << path.string() << '\n';
        return 2;
      }
    std::stringstream buffer;
    buffer << in.rdbuf();

    DtsNode root;
    MasterResolution resolution;
    try
      {
        root = parseDts(buffer.str());
        resolution = resolveMasters(root);
      }
    catch (const Error& e)
      {
        out << "error: " << e.what() << '\n';
        return 2;
      }

    out << path.filename().string() << ": " << resolution.bindings.size()
        << " master bindings\n";
    for (const std::string& diag : resolution.diagnostics)
      out << "warning: " << diag << '\n';

    for (const MasterBinding& binding : resolution.bindings)
      {
        const DtsNode* node = root.findByPhandle(binding.devicePhandle);
        char buf[96];
        snprintf(buf, sizeof(buf), "  phandle 0x%02x sid 0x%04x  %s",
                 binding.devicePhandle, binding.streamId,
                 node->name.c_str());
        out << buf;
        if (node->name.starts_with("dma@"))
          out << (isChannelEnabled(*node) ? "  [enabled]" : "  [disabled]");
        out << '\n';
      }
    return 0;
  }

}
