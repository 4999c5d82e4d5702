#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pratyaya/common.hpp"

namespace pratyaya::cli {

// Requested split does not match what the checkpoint was trained with;
// evaluating would silently mix training rows into the test set.
class split_mismatch : public config_error {
 public:
  using config_error::config_error;
};

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run(int argc, char** argv);
int run(std::vector<std::string> args, std::istream& input, std::ostream& output,
        std::ostream& errors);

std::string default_data_dir();

}  // namespace pratyaya::cli
