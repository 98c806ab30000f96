#pragma once

#include <stdexcept>
#include <string>

namespace choreo {

// Base of every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CHOREO_DEFINE_ERROR(Name)                 \
    class Name : public Error {                   \
    public:                                       \
        explicit Name(const std::string& what)    \
            : Error(std::string(#Name ": ") + what) {} \
    }

CHOREO_DEFINE_ERROR(DegenerateInput);
CHOREO_DEFINE_ERROR(ShapeMismatch);
CHOREO_DEFINE_ERROR(InvalidConfig);
CHOREO_DEFINE_ERROR(InvalidStep);
CHOREO_DEFINE_ERROR(InvalidLength);
CHOREO_DEFINE_ERROR(NumericalDegeneracy);
CHOREO_DEFINE_ERROR(IoError);
CHOREO_DEFINE_ERROR(FormatError);
CHOREO_DEFINE_ERROR(NonFiniteLoss);

#undef CHOREO_DEFINE_ERROR

}  // namespace choreo
