#pragma once

#include <stdexcept>
#include <string>

namespace ager {

#define AGER_DEFINE_ERROR(NAME)                       \
    struct NAME : std::runtime_error {                \
        using std::runtime_error::runtime_error;      \
    }

AGER_DEFINE_ERROR(DimensionError);
AGER_DEFINE_ERROR(MissingInputError);
AGER_DEFINE_ERROR(ValueError);
AGER_DEFINE_ERROR(ZeroVectorError);
AGER_DEFINE_ERROR(EmptyNameError);
AGER_DEFINE_ERROR(ProviderError);
AGER_DEFINE_ERROR(ConfigError);
AGER_DEFINE_ERROR(DatasetError);
AGER_DEFINE_ERROR(FormatError);
AGER_DEFINE_ERROR(ResumeMismatchError);
AGER_DEFINE_ERROR(DegenerateError);

#undef AGER_DEFINE_ERROR

}  // namespace ager
