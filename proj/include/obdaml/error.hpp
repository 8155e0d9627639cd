#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obdaml {

enum class Errc {
  InvalidCode,
  DepthExceeded,
  InvalidArgument,
  MalformedCsv,
  MissingColumn,
  TooFewRecords,
  ConfigInvalid,
  UnknownClass,
  EmptyCorpus,
  ShapeMismatch,
  ModelUnusable,
  EmptyMatrix,
  MismatchedReports,
  InvalidContext,
  IoError,
  ParseError,
  NoModel,
  UnknownRecord,
  Busy,
};

inline std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::InvalidCode: return "InvalidCode";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::TooFewRecords: return "TooFewRecords";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::UnknownClass: return "UnknownClass";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::ModelUnusable: return "ModelUnusable";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::MismatchedReports: return "MismatchedReports";
    case Errc::InvalidContext: return "InvalidContext";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::NoModel: return "NoModel";
    case Errc::UnknownRecord: return "UnknownRecord";
    case Errc::Busy: return "Busy";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace obdaml
