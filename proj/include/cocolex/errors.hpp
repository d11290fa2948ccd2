#pragma once

#include <stdexcept>
#include <string>

namespace cocolex {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// core
struct InvalidLogits : Error { using Error::Error; };
struct VocabMismatch : Error { using Error::Error; };
struct InvalidPenalty : Error { using Error::Error; };

// context_index
struct ShapeError : Error { using Error::Error; };
struct EmptyIndex : Error { using Error::Error; };
struct EmptyNeighbors : Error { using Error::Error; };

// confidence
struct DegenerateVocabulary : Error { using Error::Error; };
struct InvalidConfidence : Error { using Error::Error; };

// model
struct EmptyPrompt : Error { using Error::Error; };
struct InvalidToken : Error { using Error::Error; };

// retrieval
struct InvalidChunking : Error { using Error::Error; };
struct EmptyQuery : Error { using Error::Error; };

// evaluation
struct InsufficientData : Error { using Error::Error; };
struct MissingBaseline : Error { using Error::Error; };

// harness
struct DatasetError : Error {
    DatasetError(const std::string& msg, std::size_t line_number)
        : Error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    std::size_t line;
};
struct PromptTooLong : Error { using Error::Error; };

// configuration (any parameter outside its stated range)
struct InvalidConfig : Error { using Error::Error; };

}  // namespace cocolex
