#include "hamgp/version.hpp"

namespace hamgp {

const char* version() { return "0.1.0"; }

}  // namespace hamgp
