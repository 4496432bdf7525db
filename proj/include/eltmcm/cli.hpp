#pragma once

namespace eltmcm {

/// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 configuration
/// error, 4 file error, 5 failure inside a processing stage.
int cli_main(int argc, char** argv);

}  // namespace eltmcm
