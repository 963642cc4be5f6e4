#pragma once

#include <stdexcept>
#include <string>

namespace bsg {

// Exit-code classes used by the command line tool: usage 1, data 2, numerical 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
    virtual const char* kind() const noexcept { return "data"; }
};

class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
    const char* kind() const noexcept override { return "usage"; }
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
    const char* kind() const noexcept override { return "numerical"; }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

} // namespace bsg
