#pragma once

#include <stdexcept>
#include <string>

namespace lkd {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LKD_DEFINE_ERROR(Name)               \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  };

LKD_DEFINE_ERROR(ParseError)
LKD_DEFINE_ERROR(DimensionMismatch)
LKD_DEFINE_ERROR(EmptyDataset)
LKD_DEFINE_ERROR(KTooLarge)
LKD_DEFINE_ERROR(KOutOfRange)
LKD_DEFINE_ERROR(ShapeMismatch)
LKD_DEFINE_ERROR(NonFiniteInput)
LKD_DEFINE_ERROR(DegenerateWeights)
LKD_DEFINE_ERROR(NotFitted)
LKD_DEFINE_ERROR(FingerprintMismatch)
LKD_DEFINE_ERROR(IoError)
LKD_DEFINE_ERROR(CorruptArtifact)
LKD_DEFINE_ERROR(VersionUnsupported)
LKD_DEFINE_ERROR(InvalidSpec)
LKD_DEFINE_ERROR(ConfigError)

#undef LKD_DEFINE_ERROR

}  // namespace lkd
