#pragma once

#include <stdexcept>
#include <string>

namespace facade3d {

// Broad failure classes; the CLI maps each class to a distinct exit code.
enum class ErrorClass { kConfig, kIo, kValidation, kProcessing };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define FACADE3D_DEFINE_ERROR(NAME, CLASS)                                  \
  class NAME : public Error {                                               \
   public:                                                                  \
    explicit NAME(const std::string& what)                                  \
        : Error(ErrorClass::CLASS, std::string(#NAME) + ": " + what) {}     \
  }

// Configuration and input files.
FACADE3D_DEFINE_ERROR(ConfigError, kConfig);
FACADE3D_DEFINE_ERROR(IoError, kIo);
FACADE3D_DEFINE_ERROR(ParseError, kValidation);
FACADE3D_DEFINE_ERROR(InvariantViolation, kValidation);
FACADE3D_DEFINE_ERROR(DomainError, kValidation);

// Geometry.
FACADE3D_DEFINE_ERROR(ParallelRay, kProcessing);
FACADE3D_DEFINE_ERROR(BehindCamera, kProcessing);
FACADE3D_DEFINE_ERROR(DegenerateRay, kProcessing);
FACADE3D_DEFINE_ERROR(DegenerateTriangle, kProcessing);
FACADE3D_DEFINE_ERROR(DegeneratePose, kProcessing);

// Pipeline stages.
FACADE3D_DEFINE_ERROR(EmptySelection, kProcessing);
FACADE3D_DEFINE_ERROR(EmptyClusterSet, kProcessing);
FACADE3D_DEFINE_ERROR(EmptySegment, kProcessing);
FACADE3D_DEFINE_ERROR(DegenerateExtent, kProcessing);
FACADE3D_DEFINE_ERROR(InsufficientMatches, kProcessing);
FACADE3D_DEFINE_ERROR(AlignmentFailed, kProcessing);
FACADE3D_DEFINE_ERROR(InsufficientStructure, kProcessing);
FACADE3D_DEFINE_ERROR(CropOutOfBounds, kProcessing);
FACADE3D_DEFINE_ERROR(OutOfFacade, kProcessing);
FACADE3D_DEFINE_ERROR(DegenerateFacade, kProcessing);

#undef FACADE3D_DEFINE_ERROR

}  // namespace facade3d
