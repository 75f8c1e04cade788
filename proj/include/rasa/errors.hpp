#pragma once

#include <stdexcept>
#include <string>

namespace rasa {

// Base for everything this library throws on contract violations.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct IndexOutOfRange : Error {
    using Error::Error;
};
struct DuplicateEdge : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct TapeReplayed : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};
struct InvalidConfig : Error {
    using Error::Error;
};
struct EmptyGoldSet : Error {
    using Error::Error;
};
struct EmptyTraceList : Error {
    using Error::Error;
};
struct EmptySplit : Error {
    using Error::Error;
};
struct DegreeInfeasible : Error {
    using Error::Error;
};
struct GenerationStalled : Error {
    using Error::Error;
};
struct CheckpointMismatch : Error {
    using Error::Error;
};

// Carries the offending line for loader diagnostics.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line_number, const std::string& line)
        : Error(what + " (line " + std::to_string(line_number) + ": \"" + line + "\")"),
          line_number(line_number),
          line(line) {}
    std::size_t line_number;
    std::string line;
};

struct UnknownEntity : Error {
    using Error::Error;
};

}  // namespace rasa
