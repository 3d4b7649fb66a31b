#pragma once

#include <stdexcept>
#include <string>

namespace msnn {

// Base class for every error the library raises on purpose. The CLI maps
// subclasses onto its exit-code contract.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : Error { using Error::Error; };        // malformed file header/magic
struct TruncationError : Error { using Error::Error; };    // payload shorter than header claims
struct RangeError : Error { using Error::Error; };         // value outside its documented range
struct UnsupportedFormat : Error { using Error::Error; };  // recognized container, unsupported encoding
struct TooShortError : Error { using Error::Error; };      // signal shorter than one analysis window
struct NumericsError : Error { using Error::Error; };      // non-finite value where finite required
struct ShapeError : Error { using Error::Error; };         // dimension mismatch between operands
struct TraceError : Error { using Error::Error; };         // forward trace unusable for backward
struct ConfigError : Error { using Error::Error; };        // bad configuration or missing table row
struct MaskError : Error { using Error::Error; };          // non-binary or self-looping motif mask
struct DataError : Error { using Error::Error; };          // dataset missing or unreadable
struct StateError : Error { using Error::Error; };         // operation requires state not yet built
struct GridError : Error { using Error::Error; };          // accuracy grids do not overlap
struct CheckpointError : Error { using Error::Error; };    // checkpoint magic/version mismatch
struct ParseError : Error { using Error::Error; };         // malformed text input (mask/manifest line)

} // namespace msnn
