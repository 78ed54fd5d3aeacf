#pragma once

#include <stdexcept>
#include <string>

namespace efi {

// Every failure the library reports derives from Error. The CLI maps Error to
// exit code 2 (data/consistency) and UsageError to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& s) : Error("usage error: " + s) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& s) : Error("format error: " + s) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& s) : Error("dimension error: " + s) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& s) : Error("domain error: " + s) {}
};

class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& s) : Error("consistency error: " + s) {}
};

class CapabilityError : public Error {
public:
    explicit CapabilityError(const std::string& s) : Error("unsupported: " + s) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& s) : Error("schema error: " + s) {}
};

class OrphanError : public Error {
public:
    explicit OrphanError(const std::string& s) : Error("orphan error: " + s) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& s) : Error("data error: " + s) {}
};

class ExtentError : public Error {
public:
    explicit ExtentError(const std::string& s) : Error("extent error: " + s) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& s) : Error("numeric error: " + s) {}
};

class PartitionError : public Error {
public:
    explicit PartitionError(const std::string& s) : Error("partition error: " + s) {}
};

class DependencyError : public Error {
public:
    explicit DependencyError(const std::string& s) : Error("dependency error: " + s) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& s) : Error("I/O error: " + s) {}
};

} // namespace efi
