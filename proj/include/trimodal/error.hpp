#pragma once

#include <stdexcept>
#include <string>

namespace trimodal {

// Failure categories. The CLI maps these onto exit codes:
// Usage -> 1, Data/Format*/Mismatch -> 2, External -> 3.
enum class ErrorKind {
    Usage,            // bad arguments or invalid configuration
    Data,             // missing or malformed input data
    External,         // remote service failed after retries
    FormatVersion,    // index file magic/version mismatch
    FormatTruncated,  // index file shorter than declared contents
    FormatChecksum,   // index file CRC mismatch
    Mismatch,         // index/query encoder mismatch
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

}  // namespace trimodal
