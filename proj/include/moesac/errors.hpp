#pragma once

#include <stdexcept>
#include <string>

namespace moesac {

// One exception type per failure class named in the module contracts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidAction : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EpisodeOver : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleChannel : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotEnoughData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Process exit codes used by the CLI.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kConfig = 2;
inline constexpr int kIo = 3;
inline constexpr int kNumerical = 4;
}  // namespace exit_code

}  // namespace moesac
