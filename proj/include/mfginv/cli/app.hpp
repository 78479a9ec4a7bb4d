#pragma once

namespace mfginv::cli {

/// Command-line entry point:
///   run --config path [--mode m] [--out dir]
///   generate --config path [--out dir]
///   batch --configs glob [--out dir] [--summary path] [--jobs n]
/// Returns the process exit code (0 converged, 2 not converged, 1 error).
int main_cli(int argc, char** argv);

}  // namespace mfginv::cli
