#pragma once

#include <stdexcept>
#include <string>

namespace bon {

// Base class for all library errors. Subtypes exist so callers and tests
// can distinguish failure classes without parsing messages.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (bad margin, bad warmup fraction, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input data: schema violations, duplicate ids, unparseable files.
class DataError : public Error {
public:
    using Error::Error;
};

// A referenced entity does not exist (unknown passage id, fixture miss, ...).
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Vector/model dimension mismatch. Message states both dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Model checkpoint cannot be read (truncated, corrupt, wrong version).
class CheckpointError : public Error {
public:
    using Error::Error;
};

// Candidate generation failed for a session (transport exhausted, all outputs dropped).
class GenerationError : public Error {
public:
    using Error::Error;
};

// Prompt cannot be rendered for a session.
class PromptError : public Error {
public:
    using Error::Error;
};

// Selection budget out of range for the pool.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Selection strategy is missing a required input (model, assessments, ...).
class StrategyError : public Error {
public:
    using Error::Error;
};

// Run/qrels evaluation cannot proceed (no shared queries, ...).
class EvalError : public Error {
public:
    using Error::Error;
};

// File could not be opened/read/written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace bon
