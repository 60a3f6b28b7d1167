#pragma once

#include <string>
#include <vector>

namespace lesioneval::cli {

/// Entry point shared by the executable and in-process tests.
/// Returns 0 on success, 1 for input/validation errors, 2 otherwise.
int run(int argc, char** argv);
int run(std::vector<std::string> args);

}  // namespace lesioneval::cli
