#pragma once

#include <iostream>
#include <string_view>

namespace efi::pipeline {

inline bool& quiet_logging() {
    static bool quiet = false;
    return quiet;
}

// Logs go to standard error only; machine outputs go to files.
inline void log(std::string_view stage, std::string_view message) {
    if (!quiet_logging())
        std::cerr << "[efi " << stage << "] " << message << '\n';
}

} // namespace efi::pipeline
