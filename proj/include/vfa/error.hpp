#pragma once

#include <stdexcept>
#include <string>

namespace vfa {

// Validation failures raised by the library. The CLI maps every Error to
// exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class SingularHomography : public Error {
public:
    using Error::Error;
};

class OutOfGrid : public Error {
public:
    using Error::Error;
};

class DegenerateVector : public Error {
public:
    using Error::Error;
};

class DegenerateBox : public Error {
public:
    using Error::Error;
};

class PlacementFailure : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace vfa
