#pragma once

#include <string>

#include "psps/milp.hpp"

namespace psps {

/// Free-format MPS. Rows and columns keep model order; integer columns sit
/// inside MARKER blocks; every column lists its objective entry (possibly 0)
/// and explicit bounds. Numbers use the shortest round-trip form.
std::string emit_model_file(const MilpModel& model);

}  // namespace psps
