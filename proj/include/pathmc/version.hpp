#pragma once

namespace pathmc {

inline constexpr const char* kVersion = "0.1.0";

// Version tag written into every report so result files can be traced back to
// the code that produced them.
inline constexpr int kReportSchemaVersion = 1;

}  // namespace pathmc
