#pragma once

namespace gtforge::cli {

/// Exit codes: 0 success, 2 usage, 3 data, 4 numerical, 1 anything else.
int dispatch(int argc, char** argv);

}  // namespace gtforge::cli
