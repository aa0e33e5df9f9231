#pragma once

#include <stdexcept>
#include <string>

namespace drtr {

// Base type for every engine error. The CLI maps input-shaped errors to
// exit code 2 and numeric failures to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unusable input data: bad indices, shape mismatches in files, parse failures.
class MalformedInputError : public Error {
public:
    using Error::Error;
};

// A caller violated an operation's precondition.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// Dimension mismatch between in-memory tensors.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Topology delta tried to insert an edge that already exists.
class DuplicateEdgeError : public Error {
public:
    using Error::Error;
};

// Topology delta referenced a shell entry that is absent or already inactive.
class MissingEntryError : public Error {
public:
    using Error::Error;
};

// Non-finite value produced where a finite one is required.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace drtr
