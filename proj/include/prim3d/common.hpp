#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace prim3d
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Failure categories shared by every module. The CLI and the Python module
/// map these onto exit codes and exception types.
enum class ErrorCode
{
    InvalidParams,
    InternalSamplingFailure,
    Overflow,
    EmptySolid,
    DegenerateObject,
    SamplingExhausted,
    DegenerateCloud,
    EmptySet,
    DimensionMismatch,
    UnnormalizedInput,
    IndexOutOfRange,
    LengthMismatch,
    IoError,
    HeterogeneousRecords,
    BadMagic,
    ValidationFailed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
  public:
    Error(ErrorCode code, std::string const& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , code_(code)
        , detail_(what)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    //! Message without the error-code prefix.
    std::string const& detail() const noexcept { return detail_; }

  private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string const& what)
{
    throw Error(code, what);
}

}  // namespace prim3d
