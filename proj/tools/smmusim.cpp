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

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "smmusim/scenario.hpp"

namespace
{

  /// Stream that swallows everything; backs --quiet.
  class NullStream : public std::ostream
  {
  public:
    NullStream() : std::ostream(&buffer_) { }

  private:
    class NullBuffer : public std::streambuf
    {
      int overflow(int c) override { return c; }
    };

    NullBuffer buffer_;
  };

}


int main(int argc, char** argv)
{
  CLI::App app{ "SoC SMMU behavioral simulator" };
  app.require_subcommand(1);

  std::string scriptPath;
  std::string tracePath;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "Run a scenario script");
  run->add_option("script", scriptPath, "scenario script (.scn)")
     ->required();
  run->add_option("--trace", tracePath, "write trace events to a file");
  run->add_flag("--quiet", quiet, "suppress trace and command output");

  std::string dtsPath;
  CLI::App* dts = app.add_subcommand("dts", "Device-tree utilities");
  CLI::App* check = dts->add_subcommand("check",
                                        "Parse and lint a .dts file");
  check->add_option("file", dtsPath, "device-tree source file")->required();
  dts->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    {
      NullStream null;
      std::ofstream traceFile;
      std::ostream* trace = &std::cout;
      std::ostream* text = &std::cout;

      if (quiet)
        {
          trace = &null;
          text = &null;
        }
      else if (not tracePath.empty())
        {
          traceFile.open(tracePath);
          if (not traceFile)
            {
              std::cerr << "cannot open trace file " << tracePath << '\n';
              return 2;
            }
          trace = &traceFile;
        }

      smmusim::ScenarioRunner runner(*trace, *text);
      int status = runner.runFile(scriptPath);
      if (status != 0 and quiet)
        std::cerr << "scenario failed with status " << status << '\n';
      return status;
    }

  if (check->parsed())
    return smmusim::dtsCheck(dtsPath, std::cout);

  return 2;
}
