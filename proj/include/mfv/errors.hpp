#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfv {

// Base class for all library errors.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
    DimensionError(std::size_t expected, std::size_t actual)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(actual))
    {
    }
};

// An instance exceeds a solver's combinatorial cap.
class SizeLimitError : public Error
{
public:
    using Error::Error;
};

// Two measures that must share atoms (a base marginal, a junction marginal, a plan
// marginal) do not.
class MarginalMismatchError : public Error
{
public:
    using Error::Error;
};

} // namespace mfv
