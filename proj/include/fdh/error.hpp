#pragma once

#include <stdexcept>
#include <string>

namespace fdh {

// Base of every error the harness raises. Callers that only need to report
// a failure can catch this; the subclasses let tests and the pipeline tell
// the failure classes apart.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document (bad JSON, missing field, wrong type).
class ParseError : public Error {
public:
    using Error::Error;
};

// Input violates a precondition of the operation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class AudioFormatError : public Error {
public:
    using Error::Error;
};

// SNR, WER or perplexity requested where the quantity is not defined.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

// An external service (ASR, VAD, judge, LM) could not be reached or kept
// failing. `retriable()` tells the caller whether trying later may succeed.
class ServiceError : public Error {
public:
    ServiceError(const std::string& what, bool retriable)
        : Error(what), retriable_(retriable) {}

    bool retriable() const { return retriable_; }

private:
    bool retriable_;
};

} // namespace fdh
