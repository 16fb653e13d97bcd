#pragma once

#include "ullgm/cli/csv.hpp"
#include "ullgm/core.hpp"

#include <string>
#include <vector>

namespace ullgm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInput = 3;

inline constexpr const char* kVersion = "1.0.0";

/// Which CSV columns play which role. An empty covariate list means every
/// column other than the outcome and trials.
struct ColumnBinding {
  std::string outcome;
  std::string trials;
  std::vector<std::string> covariates;
};

/// Builds a dataset from a table. Throws InputError for missing columns or
/// unparsable cells (naming row and column).
Dataset load_dataset(const CsvTable& table, const ColumnBinding& binding, const FamilyTag& family);

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace ullgm::cli
