#pragma once

#include <stdexcept>
#include <string>

namespace navstream {

/// Base class for all navstream error conditions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownToken : Error {
  using Error::Error;
};

struct UnknownWord : Error {
  using Error::Error;
};

struct InvalidDepth : Error {
  using Error::Error;
};

struct PoseInCollision : Error {
  using Error::Error;
};

struct Unreachable : Error {
  using Error::Error;
};

struct CoordinateMismatch : Error {
  using Error::Error;
};

struct WindowNotFull : Error {
  using Error::Error;
};

struct EpisodeTerminated : Error {
  using Error::Error;
};

struct DegenerateEpisode : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace navstream
