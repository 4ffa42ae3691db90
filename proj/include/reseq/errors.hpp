#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace reseq {

// Base for every error the engine raises on purpose. The CLI maps subclasses
// to exit codes; anything else escaping is an internal error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

// Caller violated a precondition (bad shape, unknown id, wrong flag state).
class ContractError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "contract"; }
};

// A file or path could not be read or decoded.
class IngestError : public Error {
public:
    IngestError(std::string path, const std::string& what)
        : Error("cannot ingest '" + path + "': " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }
    const char* kind() const noexcept override { return "ingest"; }

private:
    std::string path_;
};

// On-disk bytes do not match the declared format. offset is the byte position
// where the reader gave up.
class FormatError : public Error {
public:
    FormatError(std::uint64_t offset, const std::string& what)
        : Error("format error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
    explicit FormatError(const std::string& what) : Error("format error: " + what), offset_(0) {}
    std::uint64_t offset() const noexcept { return offset_; }
    const char* kind() const noexcept override { return "format"; }

private:
    std::uint64_t offset_;
};

// Structurally valid data that breaks a semantic invariant.
class ValidationError : public Error {
public:
    ValidationError(std::size_t row, std::size_t col, const std::string& what)
        : Error("validation error at (" + std::to_string(row) + "," + std::to_string(col) + "): " + what),
          row_(row),
          col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    const char* kind() const noexcept override { return "validation"; }

private:
    std::size_t row_;
    std::size_t col_;
};

class NumericalError : public Error {
public:
    NumericalError(int epoch, const std::string& what)
        : Error("numerical error at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }
    const char* kind() const noexcept override { return "numerical"; }

private:
    int epoch_;
};

// Distribution fitting could not proceed (e.g. no spread in the sample).
class FitError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "fit"; }
};

}  // namespace reseq
