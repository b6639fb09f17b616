#pragma once

#include <stdexcept>
#include <string>

namespace curveface {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File contents are not in a supported encoding.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Array extents or vector lengths disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A parameter is outside its admissible range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A dataset directory does not have the expected layout.
class DatasetError : public Error {
public:
    using Error::Error;
};

}  // namespace curveface
