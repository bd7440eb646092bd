#include "dsvr/version.hpp"

namespace dsvr {

const char* version() { return "0.1.0"; }

}  // namespace dsvr
