#pragma once

#include <stdexcept>
#include <string>

namespace starsim {

struct SimError : std::runtime_error {
  explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoFiniteMassSolution : SimError { using SimError::SimError; };
struct IntegrationFailure : SimError { using SimError::SimError; };
struct NotCompact : SimError { using SimError::SimError; };
struct InsufficientPoints : SimError { using SimError::SimError; };
struct ProfileNotNormalized : SimError { using SimError::SimError; };
struct HistoryMissing : SimError { using SimError::SimError; };
struct SingularSystem : SimError { using SimError::SimError; };
struct NonFinite : SimError { using SimError::SimError; };
struct PicardDiverged : SimError { using SimError::SimError; };
struct DtUnderflow : SimError { using SimError::SimError; };
struct AnchorsViolateCondr : SimError { using SimError::SimError; };
struct ViewTooShort : SimError { using SimError::SimError; };
struct SeriesTooShort : SimError { using SimError::SimError; };
struct UnknownChoice : SimError { using SimError::SimError; };
struct ParseError : SimError { using SimError::SimError; };
struct ValidationError : SimError { using SimError::SimError; };
struct IoError : SimError { using SimError::SimError; };

}  // namespace starsim
