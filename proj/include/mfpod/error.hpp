#ifndef MFPOD_ERROR_HPP
#define MFPOD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mfpod {

enum class ErrorKind {
  Dimension,
  Data,
  Storage,
  Format,
  Validation,
  Ingestion,
  Instability,
  Extrapolation,
  Shape,
  Parameter,
  Alignment,
  Training,
  ModelCorrupt,
  Coverage,
};

const char* to_string(ErrorKind kind) noexcept;

//! Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Data: return "data";
    case ErrorKind::Storage: return "storage";
    case ErrorKind::Format: return "format";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::Extrapolation: return "extrapolation";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Training: return "training";
    case ErrorKind::ModelCorrupt: return "model-corrupt";
    case ErrorKind::Coverage: return "coverage";
  }
  return "unknown";
}

}  // namespace mfpod

#endif
