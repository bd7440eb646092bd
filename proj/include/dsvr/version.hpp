#pragma once

namespace dsvr {

const char* version();

}  // namespace dsvr
