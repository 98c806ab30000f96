#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace choreo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable naming the directory used when --out is omitted.
inline constexpr const char* kOutDirEnv = "CHOREO_OUT_DIR";

/// args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace choreo::cli
