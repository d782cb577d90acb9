#pragma once

#include <stdexcept>
#include <string>

namespace smokeynet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Archive could not be read (missing or unreadable directory).
class IngestError : public Error {
public:
    using Error::Error;
};

/// A file name, manifest line or sidecar document could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Split manifest or annotation contents violate a cross-check.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Image or mask dimensions do not match what an operation requires.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Invalid variant, training or config-file setting.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes handed to the model do not match its configuration.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Tile labels are missing for an example that requires them.
class SupervisionError : public Error {
public:
    using Error::Error;
};

/// A loss or metric was asked for on an empty or mismatched input.
class DefinitionError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace smokeynet
