#pragma once

namespace hamgp {

const char* version();

}  // namespace hamgp
