#include "fintwit/common.hpp"

#include <cstdlib>

#ifndef FINTWIT_DATA_DIR
#define FINTWIT_DATA_DIR "data"
#endif

namespace fintwit {

std::string data_dir() {
    if (const char* env = std::getenv("FINTWIT_DATA_DIR"); env && *env) return env;
    return FINTWIT_DATA_DIR;
}

}  // namespace fintwit
