#pragma once

#include <stdexcept>
#include <string>

namespace nrkd {

// Error taxonomy. Each condition the pipeline can reject has its own type so
// callers (and the CLI) can report a machine-parsable kind.
#define NRKD_DEFINE_ERROR(Name)                                    \
  struct Name : std::runtime_error {                               \
    explicit Name(const std::string& msg)                          \
        : std::runtime_error(std::string(#Name) + ": " + msg) {}   \
  }

NRKD_DEFINE_ERROR(SingularSystem);
NRKD_DEFINE_ERROR(ProjectiveDivideByZero);
NRKD_DEFINE_ERROR(NonInvertibleWarp);
NRKD_DEFINE_ERROR(PluginProtocolError);
NRKD_DEFINE_ERROR(PluginTimeout);
NRKD_DEFINE_ERROR(EmptyHeatmap);
NRKD_DEFINE_ERROR(ShapeError);
NRKD_DEFINE_ERROR(Unimplemented);
NRKD_DEFINE_ERROR(ConfigMismatch);
NRKD_DEFINE_ERROR(CorruptFile);
NRKD_DEFINE_ERROR(InsufficientNegatives);
NRKD_DEFINE_ERROR(DegenerateTarget);
NRKD_DEFINE_ERROR(NoActivePatches);
NRKD_DEFINE_ERROR(EmptyDataset);
NRKD_DEFINE_ERROR(TrainingDiverged);
NRKD_DEFINE_ERROR(InsufficientDescriptors);
NRKD_DEFINE_ERROR(NoSharedView);
NRKD_DEFINE_ERROR(DatasetFormatError);
NRKD_DEFINE_ERROR(ConfigError);

#undef NRKD_DEFINE_ERROR

}  // namespace nrkd
