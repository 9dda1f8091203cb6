#include "slidetutor/error.hpp"

namespace slidetutor {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedArchive: return "MalformedArchive";
    case Errc::EmptyDeck: return "EmptyDeck";
    case Errc::RendererFailed: return "RendererFailed";
    case Errc::PageCountMismatch: return "PageCountMismatch";
    case Errc::NotRasterized: return "NotRasterized";
    case Errc::EmptyCompletion: return "EmptyCompletion";
    case Errc::MalformedOutline: return "MalformedOutline";
    case Errc::InvalidRevision: return "InvalidRevision";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::NotALeaf: return "NotALeaf";
    case Errc::NoValidQuestions: return "NoValidQuestions";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::BadPosition: return "BadPosition";
    case Errc::StaleRevision: return "StaleRevision";
    case Errc::NoQueue: return "NoQueue";
    case Errc::NotAwaitingInput: return "NotAwaitingInput";
    case Errc::BadIndex: return "BadIndex";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::UnsupportedAction: return "UnsupportedAction";
    case Errc::Timeout: return "Timeout";
    case Errc::BackendRejected: return "BackendRejected";
    case Errc::TransientBackend: return "TransientBackend";
    case Errc::RetriesExhausted: return "RetriesExhausted";
    case Errc::FixtureExhausted: return "FixtureExhausted";
    case Errc::AssertionFailed: return "AssertionFailed";
    case Errc::UnknownLecture: return "UnknownLecture";
    case Errc::Conflict: return "Conflict";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InvalidRequest: return "InvalidRequest";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace slidetutor
