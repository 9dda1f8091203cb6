#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slidetutor {

enum class Errc {
  // ingest
  MalformedArchive,
  EmptyDeck,
  RendererFailed,
  PageCountMismatch,
  NotRasterized,
  // agenda / planner
  EmptyCompletion,
  MalformedOutline,
  InvalidRevision,
  UnknownNode,
  NotALeaf,
  NoValidQuestions,
  InvariantViolation,
  BadPosition,
  StaleRevision,
  // teach
  NoQueue,
  NotAwaitingInput,
  BadIndex,
  UnknownSession,
  UnsupportedAction,
  // gateway
  Timeout,
  BackendRejected,
  TransientBackend,
  RetriesExhausted,
  FixtureExhausted,
  AssertionFailed,
  // service
  UnknownLecture,
  Conflict,
  SchemaViolation,
  InvalidRequest,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace slidetutor
