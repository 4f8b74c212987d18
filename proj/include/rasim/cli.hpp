// SPDX-License-Identifier: Apache-2.0
//
// rasim: link-level simulator for reconfigurable-antenna arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RASIM_CLI_HPP
#define RASIM_CLI_HPP

#include "rasim/serialization.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rasim
{
    // Process exit codes
    enum ExitCode : int
    {
        exit_ok = 0,
        exit_config = 1,
        exit_solver = 2,
        exit_io = 3
    };

    // Loads a config file on top of the defaults. Returns false and fills errors on failure;
    // io_error is set when the file could not be read at all.
    bool load_run_config(const std::string &path, RunConfig &cfg, std::vector<ConfigError> &errors,
                         bool &io_error);

    int cmd_validate(const std::string &config_path, std::ostream &out, std::ostream &err);

    // Optional channel dump of the configured seed, written next to the results
    int cmd_run(RunConfig cfg, const std::vector<std::string> &argv, const std::optional<std::string> &dump_path,
                std::ostream &out, std::ostream &err);

    int cmd_codebook_dump(const CodebookOptions &options, const std::string &path, std::ostream &out,
                          std::ostream &err);
    int cmd_codebook_check(const std::string &path, double tol, std::ostream &out, std::ostream &err);

    // Sidecar paths derived from the CSV path: <stem>.meta.json and <stem>.agg.csv
    std::string metadata_path(const std::string &csv_path);
    std::string aggregate_path(const std::string &csv_path);

    // Help text listing every subcommand and flag, and the flat list of accepted flags
    std::string cli_help_text();
    std::vector<std::string> cli_flag_names();

    // Full command-line entry point
    int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
}

#endif
