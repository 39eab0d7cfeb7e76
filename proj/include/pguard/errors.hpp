#pragma once

#include <stdexcept>
#include <string>

namespace pguard {

// Base class for every typed error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// prefix arithmetic
class MalformedPrefix : public Error {
public:
    using Error::Error;
};
class NonCanonical : public Error {
public:
    using Error::Error;
};
class LengthOutOfRange : public Error {
public:
    using Error::Error;
};
class Unsplittable : public Error {
public:
    using Error::Error;
};

// feed ingest
class SchemaViolation : public Error {
public:
    using Error::Error;
};
class EmptyUpdate : public Error {
public:
    using Error::Error;
};

// detection
class UnknownStart : public Error {
public:
    using Error::Error;
};

// mitigation
class UnmitigableByDeaggregation : public Error {
public:
    using Error::Error;
};
class MalformedCommand : public Error {
public:
    using Error::Error;
};

// monitoring
class NoVantagePoints : public Error {
public:
    using Error::Error;
};

// simulator
class UnknownOrigin : public Error {
public:
    using Error::Error;
};
class NoCandidates : public Error {
public:
    using Error::Error;
};
class ScenarioStalled : public Error {
public:
    using Error::Error;
};

// configuration and file inputs
class ConfigInvalid : public Error {
public:
    using Error::Error;
};
class TraceMalformed : public Error {
public:
    using Error::Error;
};
class LogMalformed : public Error {
public:
    using Error::Error;
};

}  // namespace pguard
