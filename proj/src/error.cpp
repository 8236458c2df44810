#include "synthasm/error.hpp"

namespace synthasm {

int exit_code(ErrorKind kind) noexcept { return static_cast<int>(kind); }

}  // namespace synthasm
