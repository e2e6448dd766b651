#ifndef REVDETECT_ERRORS_HPP
#define REVDETECT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace revdetect {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated a documented precondition (empty input, bad range, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Input data failed validation (manifest records, lexicon files, configs).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Could not reach the backend at all (connect/read failure, after retries).
class TransportError : public Error {
public:
    using Error::Error;
};

// The backend answered, but the payload does not match the wire contract.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& msg, std::string payload = {})
        : Error(msg), raw_payload(std::move(payload)) {}

    std::string raw_payload;
};

// The backend reported an application-level error (non-2xx with body).
class BackendError : public Error {
public:
    BackendError(const std::string& msg, int status_code = 0)
        : Error(msg), status(status_code) {}

    int status;
};

} // namespace revdetect

#endif
